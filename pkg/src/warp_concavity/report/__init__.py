"""情境設定、pipeline 與報告輸出。"""

from warp_concavity.report.emit import emit, read_profile_csv
from warp_concavity.report.pipeline import ReportBundle, run_scenario
from warp_concavity.report.scenario import ScenarioConfig, load_scenario, parse_scenario
from warp_concavity.report.suite import builtin_scenarios, run_suite

__all__ = [
    'ReportBundle',
    'ScenarioConfig',
    'builtin_scenarios',
    'emit',
    'load_scenario',
    'parse_scenario',
    'read_profile_csv',
    'run_scenario',
    'run_suite',
]
