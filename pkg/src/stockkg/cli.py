"""Command-line frontend.

Exit codes: 0 success, 1 user error (bad query, unknown entity, bad input),
2 system error (I/O, corrupt snapshot, external backend).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import graph as G
from .config import AppConfig, load_config
from .core import Engine, error_json, graph_stats, table_json, to_json_text
from .errors import StockKGError, UserError
from .fixtures import generate_fixture, load_spec, synthetic_spec
from .ingest import ingest_directory
from .schema import CATALOG

EXIT_OK, EXIT_USER, EXIT_SYSTEM = 0, 1, 2


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, UserError):
        return EXIT_USER
    return EXIT_SYSTEM


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stockkg", description="Stock-market knowledge graph tools.")
    p.add_argument("--config", help="key=value config file (default: $STOCKKG_CONFIG)")
    p.add_argument("--snapshot", help="snapshot path (overrides config)")
    p.add_argument("--json", action="store_true", help="print JSON instead of tables")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="load record files and write a snapshot")
    s.add_argument("directory")
    s = sub.add_parser("query", help="run a query against the snapshot")
    s.add_argument("cypher")
    s = sub.add_parser("ask", help="answer a question against the snapshot")
    s.add_argument("question")
    s = sub.add_parser("fixture", help="generate fixture record files")
    s.add_argument("spec", help='"demo", "synthetic:<N>" or a JSON spec file')
    s.add_argument("seed", type=int)
    s.add_argument("--out", help="output directory (default: data_dir from config)")
    sub.add_parser("schema", help="print the schema catalog")
    sub.add_parser("stats", help="node and edge counts per label and type")
    sub.add_parser("repl", help="interactive loop; lines starting with :q are raw queries")
    s = sub.add_parser("serve", help="start the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8080)
    return p


class App:
    def __init__(self, config: AppConfig, as_json: bool, out, err):
        self.config = config
        self.as_json = as_json or config.output == "json"
        self.out = out
        self.err = err
        self._engine = None

    def engine(self) -> Engine:
        if self._engine is None:
            self._engine = Engine(G.load(self.config.snapshot_path), self.config.backend)
        return self._engine

    def emit(self, text: str) -> None:
        self.out.write(text if text.endswith("\n") else text + "\n")

    def cmd_ingest(self, args) -> int:
        graph, report = ingest_directory(args.directory)
        G.persist(graph, self.config.snapshot_path)
        if self.as_json:
            self.emit(to_json_text(report.to_json()))
        else:
            lines = ["Loaded:"]
            lines += [f"  {k}: {v}" for k, v in sorted(report.loaded.items())]
            lines.append(f"Rejected: {len(report.rejected)}")
            lines += [f"  {r['file']}:{r['line']}: {r['reason']}" for r in report.rejected]
            if report.unresolved_competitors:
                lines.append("Unresolved competitors: " + ", ".join(
                    str(u) for u in report.unresolved_competitors))
            lines.append(f"Graph: {graph.node_count} nodes, {graph.edge_count} edges")
            lines.append(f"Snapshot written to {self.config.snapshot_path}")
            self.emit("\n".join(lines))
        return EXIT_OK

    def run_query(self, text: str) -> None:
        table = self.engine().query(text)
        self.emit(to_json_text(table_json(table)) if self.as_json else table.to_text())

    def run_ask(self, question: str) -> None:
        report = self.engine().ask(question)
        self.emit(to_json_text(report.to_json()) if self.as_json else report.to_text())

    def cmd_query(self, args) -> int:
        self.run_query(args.cypher)
        return EXIT_OK

    def cmd_ask(self, args) -> int:
        self.run_ask(args.question)
        return EXIT_OK

    def cmd_fixture(self, args) -> int:
        if args.spec.startswith("synthetic:"):
            try:
                n = int(args.spec.split(":", 1)[1])
            except ValueError:
                raise UserError(f"bad synthetic spec {args.spec!r}") from None
            spec = synthetic_spec(n, args.seed)
        else:
            spec = load_spec(args.spec)
        paths = generate_fixture(spec, args.seed, args.out or self.config.data_dir)
        self.emit("\n".join(str(p) for p in paths))
        return EXIT_OK

    def cmd_schema(self, args) -> int:
        self.emit(to_json_text(CATALOG.to_json()) if self.as_json else CATALOG.schema_text())
        return EXIT_OK

    def cmd_stats(self, args) -> int:
        stats = graph_stats(self.engine().graph)
        if self.as_json:
            self.emit(to_json_text(stats))
        else:
            lines = [f"nodes: {stats['nodes']}", f"edges: {stats['edges']}"]
            lines += [f"  :{k} {v}" for k, v in stats["labels"].items()]
            lines += [f"  [:{k}] {v}" for k, v in stats["relationship_types"].items()]
            self.emit("\n".join(lines))
        return EXIT_OK

    def cmd_repl(self, args, stdin=None) -> int:
        stdin = stdin or sys.stdin
        self.engine()
        interactive = stdin.isatty()
        while True:
            if interactive:
                self.out.write("stockkg> ")
                self.out.flush()
            line = stdin.readline()
            if not line:
                break
            line = line.strip()
            if not line:
                continue
            if line in (":exit", ":quit"):
                break
            try:
                if line.startswith(":q"):
                    self.run_query(line[2:].strip())
                else:
                    self.run_ask(line)
            except StockKGError as exc:
                self.err.write(f"error: {exc}\n")
        return EXIT_OK

    def cmd_serve(self, args) -> int:
        from .server import make_server
        server = make_server(self.engine(), args.host, args.port)
        self.err.write(f"serving on http://{args.host}:{server.server_address[1]}\n")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return EXIT_OK


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        config = config.with_overrides(snapshot_path=args.snapshot)
        logging.basicConfig(level=config.log_level, stream=err,
                            format="%(levelname)s %(name)s: %(message)s")
        app = App(config, args.json, out, err)
        return getattr(app, "cmd_" + args.command)(args)
    except StockKGError as exc:
        info = error_json(exc)
        pos = info.get("position")
        where = f" at line {pos['line']}, column {pos['column']}" if pos else ""
        message = getattr(exc, "detail", None) or str(exc)
        err.write(f"error: {info['error']}{where}: {message}\n")
        return exit_code_for(exc)
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_SYSTEM


if __name__ == "__main__":
    sys.exit(main())
