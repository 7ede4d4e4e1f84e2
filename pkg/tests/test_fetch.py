"""Cache behavior and failure handling of the collection downloader.

No real network: the opener is replaced with canned responses.
"""
from __future__ import annotations

import io
import tarfile
import urllib.error

import pytest

from hbp_spmv.fetch import CACHE_ENV, FetchError, default_cache_dir, fetch

MTX_TEXT = "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 3.5\n"


def make_archive(member_name: str, content: bytes = MTX_TEXT.encode()) -> bytes:
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w:gz") as tar:
        info = tarfile.TarInfo(member_name)
        info.size = len(content)
        tar.addfile(info, io.BytesIO(content))
    return buf.getvalue()


class FakeResponse:
    def __init__(self, payload: bytes, declared_length=None):
        self._payload = payload
        self.headers = {}
        if declared_length is not None:
            self.headers["Content-Length"] = str(declared_length)

    def read(self) -> bytes:
        return self._payload

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def opener_returning(payload: bytes, declared_length=None, calls=None):
    def _open(url, timeout):
        if calls is not None:
            calls.append(url)
        return FakeResponse(payload, declared_length)
    return _open


class TestFetch:
    def test_downloads_and_extracts(self, tmp_path):
        archive = make_archive("tiny/tiny.mtx")
        calls = []
        path = fetch("Group/tiny", cache_dir=tmp_path,
                     _opener=opener_returning(archive, len(archive), calls))
        assert path == tmp_path / "Group" / "tiny.mtx"
        assert path.read_text() == MTX_TEXT
        assert calls == ["https://sparse.tamu.edu/MM/Group/tiny.tar.gz"]

    def test_cache_hit_skips_network(self, tmp_path):
        archive = make_archive("tiny/tiny.mtx")
        calls = []
        opener = opener_returning(archive, calls=calls)
        first = fetch("Group/tiny", cache_dir=tmp_path, _opener=opener)
        second = fetch("Group/tiny", cache_dir=tmp_path, _opener=opener)
        assert first == second
        assert len(calls) == 1

    @pytest.mark.parametrize("name", ["plain", "a/b/c", "/x", "x/"])
    def test_rejects_malformed_names(self, name, tmp_path):
        with pytest.raises(FetchError, match="group/name"):
            fetch(name, cache_dir=tmp_path)

    def test_size_mismatch(self, tmp_path):
        archive = make_archive("tiny/tiny.mtx")
        with pytest.raises(FetchError, match="size mismatch"):
            fetch("Group/tiny", cache_dir=tmp_path,
                  _opener=opener_returning(archive, len(archive) + 7))

    def test_missing_member(self, tmp_path):
        archive = make_archive("other/other.mtx")
        with pytest.raises(FetchError, match="bad archive"):
            fetch("Group/tiny", cache_dir=tmp_path,
                  _opener=opener_returning(archive))

    def test_garbage_payload(self, tmp_path):
        with pytest.raises(FetchError, match="bad archive"):
            fetch("Group/tiny", cache_dir=tmp_path,
                  _opener=opener_returning(b"definitely not a tarball"))

    def test_http_error(self, tmp_path):
        def opener(url, timeout):
            raise urllib.error.HTTPError(url, 404, "not found", None, None)
        with pytest.raises(FetchError, match="HTTP 404"):
            fetch("Group/tiny", cache_dir=tmp_path, _opener=opener)

    def test_network_error(self, tmp_path):
        def opener(url, timeout):
            raise urllib.error.URLError("no route to host")
        with pytest.raises(FetchError, match="network error"):
            fetch("Group/tiny", cache_dir=tmp_path, _opener=opener)

    def test_no_partial_file_after_failure(self, tmp_path):
        def opener(url, timeout):
            raise urllib.error.URLError("interrupted")
        with pytest.raises(FetchError):
            fetch("Group/tiny", cache_dir=tmp_path, _opener=opener)
        assert list(tmp_path.rglob("*")) == []


class TestCacheDir:
    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv(CACHE_ENV, str(tmp_path / "alt"))
        assert default_cache_dir() == tmp_path / "alt"

    def test_default_under_home(self, monkeypatch):
        monkeypatch.delenv(CACHE_ENV, raising=False)
        assert default_cache_dir().name == "hbp-spmv"
