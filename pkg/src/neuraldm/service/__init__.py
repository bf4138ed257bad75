"""HTTP dialogue service: live chat sessions, ratings, consistency filter."""

from .app import create_app
from .store import SessionStore, consistent_dialogues

__all__ = ["create_app", "SessionStore", "consistent_dialogues"]
