"""
评估结果可视化
用于绘制方法对比柱状图和逐干预 F1 热力图
"""
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns
from typing import Optional

from .metrics import METRIC_NAMES

METRIC_LABELS = ['Accuracy', 'Precision', 'Recall', 'F1']


class Visualizer:
    """评估结果可视化工具类"""

    def __init__(self):
        # 设置中文字体
        plt.rcParams['font.sans-serif'] = ['SimHei', 'DejaVu Sans']
        plt.rcParams['axes.unicode_minus'] = False

    def plot_performance_bars(self, table: pd.DataFrame, save_path: Optional[str] = None):
        """
        绘制各方法四项指标的柱状对比图（误差棒为置信区间半宽）

        Args:
            table: ComparisonResult.table() 的输出
            save_path: 保存路径（可选）
        """
        methods = list(table['method'])
        fig, axes = plt.subplots(2, 2, figsize=(14, 10))
        axes = axes.flatten()
        colors = ['#3498db', '#2ecc71', '#e74c3c', '#f39c12']

        for idx, (metric_name, metric_label) in enumerate(zip(METRIC_NAMES, METRIC_LABELS)):
            ax = axes[idx]
            values = table[metric_name].to_numpy(dtype=float)
            errors = np.nan_to_num(table[f'{metric_name}_ci'].to_numpy(dtype=float))
            bars = ax.bar(methods, values, yerr=errors, capsize=6,
                          color=[colors[i % len(colors)] for i in range(len(methods))])

            # 在柱子上显示数值
            for bar, value in zip(bars, values):
                ax.text(bar.get_x() + bar.get_width() / 2., bar.get_height(),
                        f'{100 * value:.1f}%', ha='center', va='bottom', fontsize=10)

            ax.set_ylim(0, 1.05)
            ax.set_ylabel(metric_label, fontsize=12)
            ax.set_title(metric_label, fontsize=14, fontweight='bold')
            ax.grid(axis='y', alpha=0.3)

        plt.tight_layout()
        self._finish(save_path, "性能对比图已保存")

    def plot_f1_heatmap(self, breakdown: pd.DataFrame, save_path: Optional[str] = None):
        """
        绘制逐干预 F1 热力图

        Args:
            breakdown: 行为干预、列为方法的 F1 表
            save_path: 保存路径（可选）
        """
        fig, ax = plt.subplots(figsize=(2 + 1.6 * breakdown.shape[1], 10))
        sns.heatmap(breakdown, annot=True, fmt='.2f', vmin=0.0, vmax=1.0, cmap='YlGnBu',
                    cbar_kws={'label': 'F1'}, ax=ax)
        ax.set_title('Per-intervention F1', fontsize=14, fontweight='bold')
        ax.set_xlabel('Method')
        ax.set_ylabel('Intervention')
        plt.tight_layout()
        self._finish(save_path, "热力图已保存")

    @staticmethod
    def _finish(save_path: Optional[str], notice: str):
        if save_path:
            plt.savefig(save_path, dpi=150, bbox_inches='tight')
            print(f"{notice}: {save_path}")
        else:
            plt.show()
        plt.close()
