"""CoVoL: cooperative vocabulary-learning game service."""

from covol.catalog import Catalog, PromptObject, PromptTask, build_prompt_sequence, load_catalog, validate_catalog
from covol.matching import MatchResult, match, normalize
from covol.session import SessionConfig, SessionState, create_session, handle_event, session_summary

__all__ = [
    "Catalog",
    "PromptObject",
    "PromptTask",
    "build_prompt_sequence",
    "load_catalog",
    "validate_catalog",
    "MatchResult",
    "match",
    "normalize",
    "SessionConfig",
    "SessionState",
    "create_session",
    "handle_event",
    "session_summary",
]
