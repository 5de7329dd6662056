from .app import SandboxEngine, create_app
from .sessions import SessionStore, replay_journal

__all__ = ["SandboxEngine", "create_app", "SessionStore", "replay_journal"]
