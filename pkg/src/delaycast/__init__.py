"""delaycast: intervention-aware scenario graphs, exact causal queries, and
recovery-delay prediction on synthetic strike/recovery data."""

__version__ = "0.1.0"
