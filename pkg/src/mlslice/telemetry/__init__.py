"""Flow telemetry: records, synthetic traffic, CSV ingestion, batching, features."""
from .csvio import EmptyDataset, MissingColumn, export_flow_csv, import_flow_csv, load_column_map
from .features import FEATURE_NAMES, NUMERIC_FEATURES, Featurized, FlowScaler, featurize, labels_of, records_to_matrix
from .records import (
    CLASS_NAMES,
    CLASSES,
    PROBES,
    DatasetPartition,
    FlowRecord,
    Proto,
    TrafficClass,
    check_record,
    histogram,
    total_variation,
)
from .stream import MonitoringAgent, StreamBus, stream_batches
from .synthetic import GeneratorSpec, InvalidMixture, generate_synthetic, load_spec, single_class_spec

__all__ = [
    "CLASSES",
    "CLASS_NAMES",
    "DatasetPartition",
    "EmptyDataset",
    "FEATURE_NAMES",
    "Featurized",
    "FlowRecord",
    "FlowScaler",
    "GeneratorSpec",
    "InvalidMixture",
    "MissingColumn",
    "MonitoringAgent",
    "NUMERIC_FEATURES",
    "PROBES",
    "Proto",
    "StreamBus",
    "TrafficClass",
    "check_record",
    "export_flow_csv",
    "featurize",
    "generate_synthetic",
    "histogram",
    "import_flow_csv",
    "labels_of",
    "load_column_map",
    "load_spec",
    "records_to_matrix",
    "single_class_spec",
    "stream_batches",
    "total_variation",
]
