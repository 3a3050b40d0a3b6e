"""Network-slice orchestration with embedded federated intrusion-detection agents."""

__version__ = "0.1.0"
