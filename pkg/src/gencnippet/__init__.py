"""GENCNIPPET: data pipeline, snippet-generation service, and evaluation toolkit."""

__version__ = "0.1.0"
