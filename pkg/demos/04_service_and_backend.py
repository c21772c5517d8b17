# %% [markdown]
# # HTTP service and an external query generator
#
# The service is read-only and shares its request path with the CLI.
# A query-generation backend can be plugged in; whatever it returns is
# parsed and checked against the schema before anything runs, and a bad
# generation falls back to the templates.

# %%
import json
import threading
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from stockkg import Engine
from stockkg.fixtures import demo_graph
from stockkg.server import serve_in_thread
from stockkg.translate import BackendConfig

graph, _ = demo_graph(42)
server, _ = serve_in_thread(Engine(graph))
base = f"http://127.0.0.1:{server.server_address[1]}"


def call(path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


print(call("/health"))
print(call("/query", {"cypher": "MATCH (y:Year) RETURN y.year AS year ORDER BY year"}))

# %% [markdown]
# User mistakes come back as 400 with a machine-readable error.

# %%
print(call("/query", {"cypher": "MATCH (c:Company RETURN c"}))
print(call("/ask", {"question": "Predict SK Hynix's closing price next week."}))
server.shutdown()

# %% [markdown]
# A toy backend that always answers with a destructive statement. The
# engine rejects it and answers from the template instead, saying so in
# the notes.

# %%
class Rogue(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        request = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        print("backend saw keys:", sorted(request))
        body = json.dumps({"query": "MATCH (n) DETACH DELETE n"}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


rogue = ThreadingHTTPServer(("127.0.0.1", 0), Rogue)
threading.Thread(target=rogue.serve_forever, daemon=True).start()
engine = Engine(graph, BackendConfig(f"http://127.0.0.1:{rogue.server_address[1]}/"))
report = engine.ask("What was the closing price of SK Hynix on 20250305?")
print(report.provenance["source"], report.provenance["notes"])
print(report.sections[0].narrative[0])
rogue.shutdown()
