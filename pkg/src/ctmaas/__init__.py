"""C-ITS enabled fleet and traffic management platform.

One process hosts the whole service: road network routing, the message
codec, the geo-scoped broker, advisory generation, signal priority, the
fleet service, persistence, and the HTTP API that front-ends talk to.
"""

__version__ = "0.1.0"
