"""Minimal OpenAI-compatible chat-completions client.

Used by the remote oracle and the remote generator. The API key is read from
an environment variable only; it is never accepted on the command line.
"""
from __future__ import annotations

import base64
import logging
import os
import threading
import time
from dataclasses import dataclass, field

import requests

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com/v1"
KEY_VARS = ("DUALPLAN_API_KEY", "OPENAI_API_KEY")
RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class TransportError(RuntimeError):
    """Raised when the endpoint cannot be reached or keeps failing."""


def api_key_from_env() -> str | None:
    for var in KEY_VARS:
        value = os.environ.get(var, "").strip()
        if value:
            return value
    return None


def image_part(png: bytes) -> dict:
    data = base64.b64encode(png).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{data}"}}


@dataclass
class Usage:
    requests: int = 0
    failures: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass
class ChatClient:
    endpoint: str = DEFAULT_ENDPOINT
    model: str = "gpt-4o"
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 1.5
    max_concurrent: int = 4
    session: requests.Session | None = None
    usage: Usage = field(default_factory=Usage)

    def __post_init__(self):
        self._slots = threading.BoundedSemaphore(self.max_concurrent)
        self._lock = threading.Lock()
        if self.session is None:
            self.session = requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = api_key_from_env()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def chat(self, messages: list[dict], **extra) -> str:
        """Send one chat request and return the assistant's text."""
        url = self.endpoint.rstrip("/") + "/chat/completions"
        payload = {"model": self.model, "messages": messages, "temperature": self.temperature, **extra}
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            with self._slots:
                try:
                    resp = self.session.post(url, json=payload, headers=self._headers(), timeout=self.timeout)
                except requests.RequestException as exc:
                    last = exc
                    log.warning("chat request failed (attempt %d): %s", attempt + 1, exc)
                    continue
            with self._lock:
                self.usage.requests += 1
            if resp.status_code in RETRY_STATUS:
                last = TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                log.warning("chat endpoint returned %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                with self._lock:
                    self.usage.failures += 1
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            body = resp.json()
            usage = body.get("usage") or {}
            with self._lock:
                self.usage.prompt_tokens += int(usage.get("prompt_tokens", 0))
                self.usage.completion_tokens += int(usage.get("completion_tokens", 0))
            try:
                content = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"malformed response body: {body!r:.300}") from exc
            if isinstance(content, list):
                content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
            return content or ""
        with self._lock:
            self.usage.failures += 1
        raise TransportError(f"giving up after {self.max_retries + 1} attempts: {last}")

    def ask(self, prompt: str, *, system: str | None = None, png: bytes | None = None) -> str:
        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        if png is None:
            messages.append({"role": "user", "content": prompt})
        else:
            messages.append({"role": "user", "content": [image_part(png), {"type": "text", "text": prompt}]})
        return self.chat(messages)
