"""Two-robot rendezvous with light signals: exact simulator, adversarial
schedulers, and a bounded exhaustive checker."""

__version__ = "0.1.0"
