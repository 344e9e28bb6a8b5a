"""Daily interbank transaction networks: ingest, graphs, metrics, triad census,
event-window change tables and detector ranking."""

from .analytics import (
    ChangeTable,
    DetectorScore,
    EventSpec,
    daily_change_table,
    default_event_calendar,
    extract_event_window,
    flag_anomalies,
    rank_detectors,
    zscore_series,
)
from .graph import DailyGraph, build_graph, degree_distribution, fit_power_law, merge_slices
from .ingest import (
    FormatConfig,
    MaskingKey,
    TransactionRecord,
    mask_identities,
    parse_transactions,
    slice_daily,
)
from .metrics import MacroMetrics, compute_macro_metrics, metrics_series
from .pipeline import PipelineResult, run_pipeline
from .series import MetricSeries
from .synth import GeneratorConfig, generate_stream
from .triads import TRIAD_CODES, TriadCensus, classify_triad, triad_census

__version__ = "0.1.0"
