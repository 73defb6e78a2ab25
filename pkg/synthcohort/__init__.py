"""
合成队列模块
"""
from .generator import (ARCHETYPES, Cohort, CohortConfig, LatentTrace, generate_cohort, student_id_of,
                        write_cohort)
from .noise import NoiseConfig, inject_noise, mutate_code

__all__ = [
    'ARCHETYPES', 'Cohort', 'CohortConfig', 'LatentTrace', 'generate_cohort', 'student_id_of', 'write_cohort',
    'NoiseConfig', 'inject_noise', 'mutate_code',
]
