from .base import (
    AuthError,
    BackendError,
    ChatBackend,
    ChatExchange,
    ExhaustedRetries,
    MalformedResponse,
    UsageTotals,
    usage_report,
)
from .config import MOCK_BACKEND, BackendConfig, BackendConfigError, parse_backend_configs, resolve_backend
from .factory import create_backend
from .mock import MockChatBackend, mock_complete
