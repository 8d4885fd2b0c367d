"""Maximum-margin and soft power diagrams over clustered point sets."""

__version__ = "0.1.0"
