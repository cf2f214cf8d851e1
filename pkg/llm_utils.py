import hashlib
import os
import time
from typing import Dict, List, Optional, Sequence

import requests
from dotenv import load_dotenv

from errors import ProviderError
from logger_config import api_logger, log_api_call, log_error

load_dotenv()

URL_ENV = "SCINO_PRIOR_URL"
TOKEN_ENV = "SCINO_PRIOR_TOKEN"
TIMEOUT_ENV = "SCINO_PRIOR_TIMEOUT"
CANDIDATE_PREFIX = "node_"


def prefix_candidate(name: str) -> str:
    return f"{CANDIDATE_PREFIX}{name}"


def strip_candidate(name: str) -> str:
    return name[len(CANDIDATE_PREFIX):] if name.startswith(CANDIDATE_PREFIX) else name


class ResponseCache:
    """Caches raw provider responses by prompt + candidate hash"""

    def __init__(self):
        self.request_count = 0
        self.request_cache: Dict[str, dict] = {}

    @staticmethod
    def key(prompt: str, candidates: Sequence[str]) -> str:
        return hashlib.md5((prompt + "\x1f" + "\x1f".join(candidates)).encode("utf-8")).hexdigest()

    def get_cached_response(self, key: str) -> Optional[dict]:
        return self.request_cache.get(key)

    def cache_response(self, key: str, response: dict):
        self.request_count += 1
        self.request_cache[key] = response


def parse_candidate_logprobs(response: dict, candidates: Sequence[str]) -> Dict[str, List[float]]:
    """Map each (unprefixed) candidate to its token log-probabilities"""
    try:
        entries = {
            strip_candidate(entry["name"]): [float(v) for v in entry["token_logprobs"]]
            for entry in response["candidates"]
        }
    except (KeyError, TypeError, ValueError) as e:
        raise ProviderError(f"malformed provider response: {e}") from e
    missing = [c for c in candidates if c not in entries]
    if missing:
        raise ProviderError(f"provider response lacks candidates {missing}")
    return {c: entries[c] for c in candidates}


class PriorClient:
    """
    Token-logprob endpoint client.

    POST {"prompt": str, "candidates": ["node_<name>", ...]}
      -> {"candidates": [{"name": str, "token_logprobs": [float, ...]}, ...]}
    """

    def __init__(
        self,
        url: Optional[str] = None,
        token: Optional[str] = None,
        timeout: Optional[float] = None,
        session: Optional[requests.Session] = None,
    ):
        self.url = url or os.environ.get(URL_ENV)
        self.token = token or os.environ.get(TOKEN_ENV)
        self.timeout = float(timeout or os.environ.get(TIMEOUT_ENV, 30))
        self.session = session or requests.Session()
        self.cache = ResponseCache()
        self.last_raw_response: Optional[dict] = None

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def request(self, prompt: str, candidates: Sequence[str]) -> dict:
        """Raw JSON response for unprefixed candidate names"""
        if not self.url:
            raise ProviderError(f"no provider endpoint configured (set {URL_ENV})")
        wire_candidates = [prefix_candidate(c) for c in candidates]
        key = ResponseCache.key(prompt, wire_candidates)
        cached = self.cache.get_cached_response(key)
        if cached is not None:
            api_logger.info(f"Returning cached prior response for: {key[:8]}...")
            self.last_raw_response = cached
            return cached

        start = time.monotonic()
        try:
            response = self.session.post(
                self.url,
                json={"prompt": prompt, "candidates": wire_candidates},
                headers=self._headers(),
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
        except requests.Timeout as e:
            log_api_call("PRIOR", "TIMEOUT", f"{len(candidates)} candidates")
            raise ProviderError(f"provider timed out after {self.timeout}s") from e
        except (requests.RequestException, ValueError) as e:
            log_error("API_ERROR", f"prior request failed: {type(e).__name__}", function_name="PriorClient.request")
            raise ProviderError(f"provider request failed: {type(e).__name__}") from e

        latency_ms = (time.monotonic() - start) * 1000.0
        log_api_call("PRIOR", "SUCCESS", f"{len(candidates)} candidates", latency_ms)
        self.cache.cache_response(key, payload)
        self.last_raw_response = payload
        return payload
