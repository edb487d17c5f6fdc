"""User management and token auth.

Tokens are server-signed opaque strings: base64url(payload).hmac_sha256.
Validation distinguishes bad credentials, unknown users, expired tokens, and
tampered tokens, because the API maps them to different responses.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import threading
from dataclasses import dataclass
from enum import Enum


class Role(str, Enum):
    FleetManager = "FleetManager"
    TrafficManager = "TrafficManager"
    Driver = "Driver"


class AuthError(Exception):
    pass


class BadCredentialError(AuthError):
    pass


class ExpiredTokenError(AuthError):
    pass


class TamperedTokenError(AuthError):
    pass


class UnknownUserError(AuthError):
    pass


@dataclass(frozen=True)
class User:
    user_id: str
    display_name: str
    role: Role
    credential_hash: str
    subject: str | None = None  # fleet identity (driver id) for Driver accounts


@dataclass(frozen=True)
class AuthToken:
    token: str
    user_id: str
    issued_at: float
    expires_at: float


def _hash_credential(user_id: str, credential: str) -> str:
    return hashlib.sha256(f"{user_id}:{credential}".encode("utf-8")).hexdigest()


def _b64(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def _unb64(text: str) -> bytes:
    pad = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + pad)


class TokenService:
    def __init__(self, secret: str, ttl_s: float = 3600.0, log=None):
        self._secret = secret.encode("utf-8")
        self.ttl_s = ttl_s
        self._users: dict[str, User] = {}
        self._lock = threading.Lock()
        self._log = log

    def add_user(self, user_id: str, display_name: str, role: Role | str,
                 credential: str, subject: str | None = None, now: float = 0.0) -> User:
        role = Role(role)
        user = User(user_id, display_name, role, _hash_credential(user_id, credential),
                    subject)
        with self._lock:
            self._users[user_id] = user
        if self._log is not None:
            self._log.append(now, "auth", "user", {
                "op": "put", "key": user_id,
                "value": {"display_name": display_name, "role": role.value,
                          "credential_hash": user.credential_hash, "subject": subject}})
        return user

    def user(self, user_id: str) -> User:
        with self._lock:
            if user_id not in self._users:
                raise UnknownUserError(f"unknown user {user_id!r}")
            return self._users[user_id]

    def _sign(self, payload: bytes) -> str:
        return hmac.new(self._secret, payload, hashlib.sha256).hexdigest()

    def login(self, user_id: str, credential: str, now: float) -> AuthToken:
        user = self.user(user_id)
        if not hmac.compare_digest(user.credential_hash, _hash_credential(user_id, credential)):
            raise BadCredentialError(f"bad credential for {user_id!r}")
        payload = json.dumps({
            "user_id": user_id,
            "issued_at": now,
            "expires_at": now + self.ttl_s,
        }, sort_keys=True, separators=(",", ":")).encode("utf-8")
        token = f"{_b64(payload)}.{self._sign(payload)}"
        return AuthToken(token, user_id, now, now + self.ttl_s)

    def validate(self, token: str, now: float) -> User:
        try:
            payload_b64, signature = token.split(".", 1)
            payload = _unb64(payload_b64)
        except ValueError as exc:
            raise TamperedTokenError("token structure invalid") from exc
        if not hmac.compare_digest(signature, self._sign(payload)):
            raise TamperedTokenError("token signature mismatch")
        doc = json.loads(payload)
        if now > doc["expires_at"]:
            raise ExpiredTokenError(f"token expired at {doc['expires_at']}")
        return self.user(doc["user_id"])
