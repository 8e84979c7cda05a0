"""
Content-addressed completion cache.

Keys are sha256 digests over everything that determines a model's input; entries
are files `<cache_dir>/<first 2 hex>/<digest>` written through a temp file and
an atomic rename.
"""

import asyncio
import json
import logging
import os
import tempfile

from hashlib import sha256
from pathlib import Path

from langchain_core.messages import BaseMessage
from pydantic import BaseModel, ValidationError

from ..llm.base import ChatBackend, to_wire_messages
from ..llm.config import BackendConfig


class CachedCompletion(BaseModel):
    """A stored completion with the usage it cost when first produced."""
    completion_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


def make_cache_key(config: BackendConfig, messages: list[BaseMessage], max_tokens: int) -> str:
    """Digest over backend id, model, rendered prompt bytes, temperature and max tokens."""
    identity = {
        "backend_id": config.backend_id,
        "model_name": config.model_name,
        "messages": to_wire_messages(messages),
        "temperature": config.temperature,
        "max_completion_tokens": max_tokens,
    }
    canonical = json.dumps(identity, sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return sha256(canonical.encode("utf-8")).hexdigest()


class CompletionCache:
    """
    Filesystem cache of completions, safe for concurrent writers.

    Concurrent lookups of the same key inside one event loop are serialized, so
    duplicate prompts reach the backend once.
    """

    def __init__(self, cache_dir: Path | str):
        self.cache_dir = Path(cache_dir)
        self.hits = 0
        self.misses = 0
        self._key_locks: dict[str, asyncio.Lock] = {}

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / key

    def get(self, key: str) -> CachedCompletion | None:
        path = self._path(key)
        try:
            entry = CachedCompletion.model_validate_json(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            self.misses += 1
            return None
        except (ValidationError, ValueError) as e:
            logging.warning(f"Ignoring corrupt cache entry {path}: {e}")
            self.misses += 1
            return None

        self.hits += 1
        return entry

    def put(self, key: str, entry: CachedCompletion) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)

        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as tmp:
                tmp.write(entry.model_dump_json())
            os.replace(tmp_name, path)
        except BaseException:
            Path(tmp_name).unlink(missing_ok=True)
            raise

    async def complete(
        self,
        backend: ChatBackend,
        messages: list[BaseMessage],
        max_tokens: int | None = None,
    ) -> tuple[CachedCompletion, bool]:
        """
        Returns the cached completion for the prompt, calling the backend on a miss.

        Returns:
            The completion and whether it was served from the cache.
        """
        max_tokens = max_tokens or backend.config.max_completion_tokens
        key = make_cache_key(backend.config, messages, max_tokens)

        lock = self._key_locks.setdefault(key, asyncio.Lock())
        try:
            async with lock:
                entry = self.get(key)
                if entry is not None:
                    return entry, True

                exchange = await backend.complete(messages, max_tokens=max_tokens)
                entry = CachedCompletion(
                    completion_text=exchange.completion_text,
                    prompt_tokens=exchange.prompt_tokens,
                    completion_tokens=exchange.completion_tokens,
                )
                self.put(key, entry)
                return entry, False
        finally:
            # waiters keep their reference; later lookups find the entry on disk
            if self._key_locks.get(key) is lock:
                del self._key_locks[key]
