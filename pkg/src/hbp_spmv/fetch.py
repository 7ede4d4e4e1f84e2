"""Downloader for SuiteSparse collection matrices with a local cache.

The only networked code path in the package; everything else runs offline.
Files land in the cache atomically (write to a temp name, then rename), so
an interrupted download never leaves a partial .mtx behind.
"""
from __future__ import annotations

import io
import os
import tarfile
import tempfile
import urllib.error
import urllib.request
from pathlib import Path

__all__ = ["FetchError", "default_cache_dir", "fetch"]

BASE_URL = "https://sparse.tamu.edu/MM/{group}/{name}.tar.gz"
CACHE_ENV = "HBP_CACHE_DIR"


class FetchError(RuntimeError):
    """Network failure, missing matrix, or a bad archive."""


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "hbp-spmv"


def fetch(qualified_name: str, cache_dir: Path | str | None = None,
          timeout: float = 60.0, _opener=urllib.request.urlopen) -> Path:
    """Return a local .mtx path for "group/name", downloading on cache miss.

    Idempotent: a cached file short-circuits without touching the network.
    """
    if qualified_name.count("/") != 1:
        raise FetchError(f"expected group/name, got {qualified_name!r}")
    group, name = qualified_name.split("/")
    if not group or not name:
        raise FetchError(f"expected group/name, got {qualified_name!r}")

    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    target = cache / group / f"{name}.mtx"
    if target.exists():
        return target

    url = BASE_URL.format(group=group, name=name)
    try:
        with _opener(url, timeout=timeout) as resp:
            payload = resp.read()
            declared = resp.headers.get("Content-Length") if resp.headers else None
    except urllib.error.HTTPError as exc:
        raise FetchError(f"HTTP {exc.code} fetching {url}") from exc
    except (urllib.error.URLError, OSError, TimeoutError) as exc:
        raise FetchError(f"network error fetching {url}: {exc}") from exc
    if declared is not None and int(declared) != len(payload):
        raise FetchError(
            f"size mismatch: expected {declared} bytes, got {len(payload)}")

    member_name = f"{name}/{name}.mtx"
    try:
        with tarfile.open(fileobj=io.BytesIO(payload), mode="r:gz") as tar:
            member = tar.getmember(member_name)
            extracted = tar.extractfile(member)
            if extracted is None:
                raise FetchError(f"{member_name} is not a regular file")
            content = extracted.read()
    except (tarfile.TarError, KeyError, EOFError) as exc:
        raise FetchError(f"bad archive for {qualified_name}: {exc}") from exc

    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(content)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target
