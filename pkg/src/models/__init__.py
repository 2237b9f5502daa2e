from .config import DatasetSpec, TsneConfig, SweepConfig, load_sweep_config
from .records import AccuracyReport, JlAudit, RunRecord, RatioRow, FigureSpec, FigureSeries

__all__ = [
    'DatasetSpec', 'TsneConfig', 'SweepConfig', 'load_sweep_config',
    'AccuracyReport', 'JlAudit', 'RunRecord', 'RatioRow', 'FigureSpec', 'FigureSeries',
]
