"""Edge-routed cellular core simulator and deployment analysis toolkit."""

__version__ = "0.1.0"
