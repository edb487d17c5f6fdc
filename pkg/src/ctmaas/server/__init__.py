from .app import ENDPOINT_ROLES, create_app

__all__ = ["ENDPOINT_ROLES", "create_app"]
