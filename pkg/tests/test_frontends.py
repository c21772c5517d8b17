import io
import json
import threading
import time
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from conftest import CASE1_QUESTION, CASE2_QUESTION, listing

from stockkg.cli import main
from stockkg.config import AppConfig, ConfigError, load_config, parse_config_text
from stockkg.core import Engine
from stockkg.fixtures import demo_spec, generate_fixture
from stockkg.graph import load, persist, structural_hash
from stockkg.server import serve_in_thread
from stockkg.translate import BackendConfig


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def snapshot(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    generate_fixture(demo_spec(), 42, root / "data")
    snap = root / "graph.snap"
    code, out, err = cli("--snapshot", str(snap), "ingest", str(root / "data"))
    assert code == 0, err
    return snap


@pytest.fixture(autouse=True)
def _no_ambient_config(monkeypatch):
    for key in ("STOCKKG_CONFIG", "STOCKKG_SNAPSHOT_PATH", "STOCKKG_OUTPUT", "STOCKKG_BACKEND_URL",
                "STOCKKG_DATA_DIR", "STOCKKG_LOG_LEVEL", "STOCKKG_BACKEND_TIMEOUT_S"):
        monkeypatch.delenv(key, raising=False)


class TestCli:
    def test_ingest_report(self, tmp_path):
        generate_fixture(demo_spec(), 42, tmp_path / "d")
        code, out, _ = cli("--snapshot", str(tmp_path / "g.snap"), "--json", "ingest",
                           str(tmp_path / "d"))
        assert code == 0
        report = json.loads(out)
        assert report["loaded"]["Company"] == 12 and report["rejected"] == []

    def test_query_table_and_json(self, snapshot):
        code, out, _ = cli("--snapshot", str(snapshot), "query", listing("case1"))
        assert code == 0 and out.rstrip().endswith("(3 rows)")
        code, out, _ = cli("--snapshot", str(snapshot), "--json", "query", listing("case1"))
        data = json.loads(out)
        assert [r["year"] for r in data["rows"]] == [2023, 2024, 2025]

    def test_syntax_error_exit_1_with_position(self, snapshot):
        code, out, err = cli("--snapshot", str(snapshot), "query", "MATCH (")
        assert code == 1 and out == ""
        assert err.startswith("error: ParseError at line 1, column 8:")

    def test_unsupported_exit_1(self, snapshot):
        code, _, err = cli("--snapshot", str(snapshot), "ask", "What will Samsung be worth?")
        assert code == 1 and "UnsupportedQuestion" in err

    def test_missing_snapshot_exit_2(self, tmp_path):
        code, _, err = cli("--snapshot", str(tmp_path / "none.snap"), "stats")
        assert code == 2 and "IoFailure" in err

    def test_corrupt_snapshot_exit_2(self, tmp_path):
        bad = tmp_path / "bad.snap"
        bad.write_bytes(b"garbage")
        code, _, err = cli("--snapshot", str(bad), "stats")
        assert code == 2 and "CorruptSnapshot" in err

    def test_ask_text(self, snapshot):
        code, out, _ = cli("--snapshot", str(snapshot), "ask", CASE2_QUESTION)
        assert code == 0
        assert "== Undervalued ==" in out and "== Provenance ==" in out

    def test_stats_and_schema(self, snapshot):
        code, out, _ = cli("--snapshot", str(snapshot), "--json", "stats")
        assert json.loads(out)["nodes"] == 133
        code, out, _ = cli("schema")
        assert code == 0 and "COMPETES_WITH: Company -> Company" in out

    def test_fixture_determinism(self, tmp_path):
        for name in ("a", "b"):
            assert cli("fixture", "synthetic:30", "7", "--out", str(tmp_path / name))[0] == 0
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
        assert cli("fixture", "synthetic:x", "7", "--out", str(tmp_path))[0] == 1

    def test_repl(self, snapshot, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO(
            ":q MATCH (c:Company) RETURN count\nnonsense question\n"
            ":q MATCH (s:Sector) RETURN s.stock_sector_nm AS s\n:exit\nnever\n"))
        code, out, err = cli("--snapshot", str(snapshot), "repl")
        assert code == 0
        assert "Semiconductor" in out
        assert err.count("error:") == 2


class TestConfig:
    def test_file_and_env_precedence(self, tmp_path):
        cfg = tmp_path / "stockkg.conf"
        cfg.write_text("# comment\nsnapshot_path = a.snap\noutput = json\n"
                       "backend_url = http://x\nbackend_timeout_s = 5\n")
        c = load_config(cfg, env={"STOCKKG_SNAPSHOT_PATH": "b.snap"})
        assert c.snapshot_path == "b.snap" and c.output == "json"
        assert c.backend == BackendConfig("http://x", 5)
        c = load_config(None, env={"STOCKKG_CONFIG": str(cfg)})
        assert c.snapshot_path == "a.snap"

    @pytest.mark.parametrize("text", ["nope", "colour = red", "output = xml",
                                      "backend_url = http://x\nbackend_timeout_s = 0"])
    def test_bad_config(self, tmp_path, text):
        cfg = tmp_path / "c.conf"
        cfg.write_text(text)
        with pytest.raises(ConfigError):
            load_config(cfg, env={})

    def test_defaults(self):
        assert load_config(None, env={}) == AppConfig()
        assert parse_config_text("") == {}

    def test_cli_uses_config_output(self, snapshot, tmp_path):
        cfg = tmp_path / "c.conf"
        cfg.write_text(f"snapshot_path = {snapshot}\noutput = json\n")
        code, out, _ = cli("--config", str(cfg), "stats")
        assert code == 0 and json.loads(out)["edges"] == 242

    def test_bad_config_exit_1(self, tmp_path):
        cfg = tmp_path / "c.conf"
        cfg.write_text("output = xml\n")
        assert cli("--config", str(cfg), "stats")[0] == 1


def http(method, url, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode("utf-8")


@pytest.fixture(scope="module")
def service(snapshot):
    engine = Engine(load(snapshot))
    server, _ = serve_in_thread(engine)
    yield engine, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


class TestHttp:
    def test_health(self, service):
        status, body = http("GET", service[1] + "/health")
        assert status == 200 and json.loads(body) == {"status": "ok", "nodes": 133, "edges": 242}

    def test_schema(self, service):
        status, body = http("GET", service[1] + "/schema")
        assert status == 200 and len(json.loads(body)["relationship_types"]) == 11

    def test_query_years(self, service):
        status, body = http("POST", service[1] + "/query",
                            {"cypher": "MATCH (y:Year) RETURN y.year AS year ORDER BY year"})
        assert status == 200
        assert [r["year"] for r in json.loads(body)["rows"]] == [2023, 2024, 2025]

    @pytest.mark.parametrize("path,body", [
        ("/query", {"cypher": "MATCH ("}),
        ("/query", {"query": "x"}),
        ("/ask", {"question": "Forecast SK Hynix revenue for next year"}),
        ("/ask", {"question": "Compare revenue of (stock code: 999999) and Samsung in 2024"}),
    ])
    def test_user_errors_are_400(self, service, path, body):
        status, text = http("POST", service[1] + path, body)
        assert status == 400 and "error" in json.loads(text)

    def test_parse_error_position(self, service):
        _, text = http("POST", service[1] + "/query", {"cypher": "MATCH ("})
        assert json.loads(text)["position"] == {"line": 1, "column": 8}

    def test_not_json_400_and_unknown_404(self, service):
        req = urllib.request.Request(service[1] + "/query", data=b"{", method="POST")
        with pytest.raises(urllib.error.HTTPError) as info:
            urllib.request.urlopen(req, timeout=5)
        assert info.value.code == 400
        assert http("GET", service[1] + "/nope")[0] == 404

    @pytest.mark.parametrize("kind,argv,path,body", [
        ("query", ["query", listing("case2")], "/query", {"cypher": listing("case2")}),
        ("ask", ["ask", CASE1_QUESTION], "/ask", {"question": CASE1_QUESTION}),
        ("ask", ["ask", CASE2_QUESTION], "/ask", {"question": CASE2_QUESTION}),
    ])
    def test_cli_and_http_json_identical(self, snapshot, service, kind, argv, path, body):
        code, out, _ = cli("--snapshot", str(snapshot), "--json", *argv)
        status, text = http("POST", service[1] + path, body)
        assert code == 0 and status == 200
        assert out.rstrip("\n") == text

    def test_serving_does_not_change_the_graph(self, snapshot, service):
        engine, url = service
        before = structural_hash(engine.graph)
        file_bytes = snapshot.read_bytes()
        threads = [threading.Thread(target=http, args=("POST", url + "/ask",
                                                      {"question": CASE2_QUESTION}))
                   for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(30)
        assert structural_hash(engine.graph) == before == structural_hash(load(snapshot))
        assert snapshot.read_bytes() == file_bytes


class _SlowBackend(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        self.rfile.read(int(self.headers["Content-Length"]))
        time.sleep(2.5)
        try:
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"{}")
        except OSError:
            pass


def test_backend_timeout_is_504_and_exit_2(snapshot, tmp_path):
    backend = ThreadingHTTPServer(("127.0.0.1", 0), _SlowBackend)
    backend.daemon_threads = True
    threading.Thread(target=backend.serve_forever, daemon=True).start()
    url = f"http://127.0.0.1:{backend.server_address[1]}/"
    try:
        engine = Engine(load(snapshot), BackendConfig(url, timeout_s=1))
        server, _ = serve_in_thread(engine)
        try:
            status, text = http("POST", f"http://127.0.0.1:{server.server_address[1]}/ask",
                                {"question": CASE1_QUESTION})
            assert status == 504 and json.loads(text)["error"] == "BackendTimeout"
        finally:
            server.shutdown()
            server.server_close()
        cfg = tmp_path / "c.conf"
        cfg.write_text(f"snapshot_path = {snapshot}\nbackend_url = {url}\nbackend_timeout_s = 1\n")
        code, _, err = cli("--config", str(cfg), "ask", CASE1_QUESTION)
        assert code == 2 and "BackendTimeout" in err
    finally:
        backend.shutdown()
        backend.server_close()


def test_persisted_snapshot_round_trip(snapshot, tmp_path):
    g = load(snapshot)
    persist(g, tmp_path / "again.snap")
    assert (tmp_path / "again.snap").read_bytes() == snapshot.read_bytes()
