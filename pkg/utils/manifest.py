"""
运行清单
记录命令、生效配置、种子、输入/输出文件哈希与依赖版本，不含时间戳（重跑字节一致）
"""
import hashlib
import json
import os
import platform
from importlib import metadata
from typing import Any, Dict, Mapping, Optional, Sequence

PACKAGES = ('numpy', 'pandas', 'scipy', 'matplotlib', 'seaborn', 'tqdm', 'requests', 'PyYAML', 'joblib')


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


def config_sha256(config: Mapping[str, Any]) -> str:
    text = json.dumps(config, sort_keys=True, default=str, ensure_ascii=False)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {'python': platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = 'missing'
    return versions


def build_manifest(command: str, config: Mapping[str, Any], seed: int,
                   inputs: Optional[Mapping[str, str]] = None,
                   outputs: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    """
    构造运行清单

    Args:
        command: 子命令名
        config: 生效配置
        seed: 随机种子
        inputs: 输入标签 -> 文件路径
        outputs: 输出文件路径（记录文件名与哈希）

    Returns:
        Dict[str, Any]: 清单
    """
    manifest = {
        'command': command,
        'seed': seed,
        'config': json.loads(json.dumps(config, sort_keys=True, default=str)),
        'config_sha256': config_sha256(config),
        'inputs': {label: {'path': path, 'sha256': file_sha256(path)}
                   for label, path in sorted((inputs or {}).items()) if path and os.path.isfile(path)},
        'outputs': {os.path.basename(path): file_sha256(path)
                    for path in sorted(outputs or ()) if os.path.isfile(path)},
        'versions': package_versions(),
    }
    return manifest


def write_manifest(out_dir: str, manifest: Mapping[str, Any], name: str = 'manifest.json') -> str:
    path = os.path.join(out_dir, name)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(manifest, f, sort_keys=True, indent=1, ensure_ascii=False)
        f.write('\n')
    return path
