"""Operator tooling: serve the API, import/export corpora, record replay
fixtures, and run scripted end-to-end sessions headlessly for CI.

A session script is a JSON document of API-shaped steps:

    {"steps": [
      {"op": "import_bundled_corpus"},
      {"op": "create_session", "subjects": ["informal", "science"],
       "material_titles": ["The Old Willow", "First Snow", "Night Fishing"]},
      {"op": "recommend"},
      {"op": "star_context", "index": 0},
      {"op": "analyze", "context_index": 0},
      {"op": "star_texts", "context_index": 0, "count": 3},
      {"op": "plan", "context_index": 0, "lessons": 7},
      {"op": "activities", "context_index": 0},
      {"op": "download", "format": "txt"},
      {"op": "download", "format": "html"}
    ]}

``run-script`` exits nonzero iff any step returned an error code.
"""

from __future__ import annotations

import json
import sys
import time
from importlib import resources
from pathlib import Path

import click

from .api.app import AppConfig, create_app
from .corpus import Corpus
from .gateway import Gateway, ProviderConfig, fixture_key, save_fixtures


def _provider_from(provider_config: str | None, kind: str | None,
                   fixtures: str | None) -> ProviderConfig:
    if provider_config:
        cfg = ProviderConfig.from_file(provider_config)
    else:
        cfg = ProviderConfig(kind=kind or "scripted")
    if kind:
        cfg.kind = kind
    if fixtures:
        cfg.kind = "replay"
        cfg.fixture_path = fixtures
    return cfg


@click.group()
def main():
    """Interdisciplinary theme ideation service tooling."""


@main.command()
@click.option("--listen", default="127.0.0.1:8600", show_default=True)
@click.option("--corpus-dir", type=click.Path(), default=None)
@click.option("--sessions-dir", type=click.Path(), default=None)
@click.option("--provider-config", type=click.Path(exists=True), default=None)
@click.option("--fixtures", type=click.Path(exists=True), default=None,
              help="Fixture file; switches the provider to replay mode.")
@click.option("--static-dir", type=click.Path(), default=None,
              help="Directory of built web UI files to serve at /.")
@click.option("--language", default="en", show_default=True)
@click.option("--log-level", default="info", show_default=True)
def serve(listen, corpus_dir, sessions_dir, provider_config, fixtures,
          static_dir, language, log_level):
    """Run the HTTP service."""
    import uvicorn

    host, _, port = listen.partition(":")
    provider = _provider_from(provider_config, None, fixtures)
    app = create_app(AppConfig(
        provider=provider, corpus_dir=corpus_dir, sessions_dir=sessions_dir,
        content_language=language, static_dir=static_dir,
    ))
    uvicorn.run(app, host=host, port=int(port or 8600), log_level=log_level)


@main.command("corpus-import")
@click.argument("path", type=click.Path(exists=True))
@click.option("--subject", default=None,
              help="Force a subject; otherwise records carry their own.")
@click.option("--materials", "as_materials", is_flag=True,
              help="Import reading materials instead of pool contexts.")
@click.option("--corpus-dir", type=click.Path(), required=True)
@click.option("--provider-config", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable summary.")
def corpus_import(path, subject, as_materials, corpus_dir, provider_config, as_json):
    """Batch-import a pool or materials file into the corpus directory."""
    provider = _provider_from(provider_config, None, None)
    corpus = Corpus(Gateway(provider), corpus_dir)
    if as_materials:
        records = [
            json.loads(line)
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        imported = len(corpus.import_materials(records))
        summary = {"imported": imported, "duplicates": []}
    else:
        count, duplicates = corpus.import_pool_file(path, subject)
        summary = {"imported": count, "duplicates": duplicates}
    if as_json:
        click.echo(json.dumps(summary, ensure_ascii=False))
    else:
        click.echo(f"imported {summary['imported']} records "
                   f"({len(summary['duplicates'])} duplicates rejected)")


@main.command("corpus-export")
@click.option("--corpus-dir", type=click.Path(exists=True), required=True)
@click.option("--provider-config", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None, help="Default: stdout.")
def corpus_export(corpus_dir, provider_config, out):
    """Export the context pool in the batch-import file format."""
    provider = _provider_from(provider_config, None, None)
    corpus = Corpus(Gateway(provider), corpus_dir)
    text = corpus.export_pool()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


class ScriptRunner:
    """Drives a session script against an in-process app."""

    def __init__(self, app, poll_interval: float = 0.02):
        from fastapi.testclient import TestClient

        self.client = TestClient(app, raise_server_exceptions=False)
        self.state = app.state.tw
        self.session_id: str | None = None
        self.poll_interval = poll_interval
        self.results: list[dict] = []
        self.exports: dict[str, bytes] = {}

    def _wait(self, job_id: str) -> dict:
        while True:
            job = self.client.get(f"/v1/jobs/{job_id}").json()
            if job["status"] != "pending":
                return job
            time.sleep(self.poll_interval)

    def _session_state(self) -> dict:
        return self.client.get(f"/v1/sessions/{self.session_id}").json()

    def _context_card(self, index: int) -> dict:
        return self._session_state()["context_cards"][index]

    def run(self, script: dict) -> bool:
        ok = True
        for step in script["steps"]:
            status, detail = self._step(dict(step))
            self.results.append({"op": step["op"], "status": status, "detail": detail})
            if status >= 400 or (isinstance(detail, dict)
                                 and detail.get("status") == "failed"):
                ok = False
        return ok

    def _step(self, step: dict) -> tuple[int, object]:
        op = step.pop("op")
        c = self.client
        if op == "import_bundled_corpus":
            data = resources.files("themeweaver.data")
            corpus = self.state.corpus
            n1, _ = corpus.import_pool_file(str(data / "pool_informal.jsonl"))
            n2, _ = corpus.import_pool_file(str(data / "pool_subjects.jsonl"))
            mats = [
                json.loads(line)
                for line in (data / "sample_materials.jsonl")
                .read_text(encoding="utf-8").splitlines()
            ]
            materials = corpus.import_materials(mats)
            return 200, {"pool": n1 + n2, "materials": len(materials)}
        if op == "import_materials":
            resp = c.post("/v1/corpus/materials", json={"records": step["records"]})
            return resp.status_code, resp.json()
        if op == "create_session":
            by_title = {m.title: m.id for m in self.state.corpus.materials.values()}
            ids = step.get("material_ids") or [
                by_title[t] for t in step["material_titles"]
            ]
            resp = c.post("/v1/sessions", json={
                "subjects": step["subjects"], "material_ids": ids,
                "content_language": step.get("content_language", "en"),
            })
            if resp.status_code == 200:
                self.session_id = resp.json()["session_id"]
            return resp.status_code, resp.json()
        if op == "recommend":
            resp = c.post(f"/v1/sessions/{self.session_id}/contexts/recommend")
            if resp.status_code != 200:
                return resp.status_code, resp.json()
            return 200, self._wait(resp.json()["job_id"])
        if op == "manual_context":
            resp = c.post(f"/v1/sessions/{self.session_id}/contexts/manual", json={
                "title": step["title"], "background": step["background"]})
            if resp.status_code != 200:
                return resp.status_code, resp.json()
            return 200, self._wait(resp.json()["job_id"])
        if op == "star_context":
            card = self._context_card(step["index"])
            resp = c.post(
                f"/v1/sessions/{self.session_id}/cards/{card['card_id']}/star")
            return resp.status_code, resp.json()
        if op == "delete_context":
            card = self._context_card(step["index"])
            resp = c.post(
                f"/v1/sessions/{self.session_id}/cards/{card['card_id']}/delete")
            return resp.status_code, resp.json()
        if op == "analyze":
            card = self._context_card(step["context_index"])
            resp = c.post(
                f"/v1/sessions/{self.session_id}/contexts/{card['card_id']}/analyze")
            if resp.status_code != 200:
                return resp.status_code, resp.json()
            return 200, self._wait(resp.json()["job_id"])
        if op == "star_texts":
            card = self._context_card(step["context_index"])
            count = step.get("count", len(card["text_cards"]))
            last = None
            for child in card["text_cards"][:count]:
                last = c.post(
                    f"/v1/sessions/{self.session_id}/cards/{child['card_id']}/star")
            return (last.status_code if last else 200,
                    last.json() if last else None)
        if op == "find":
            card = self._context_card(step["context_index"])
            resp = c.post(
                f"/v1/sessions/{self.session_id}/cards/{card['card_id']}/find",
                json={"question": step["question"]})
            return resp.status_code, resp.json()
        if op == "edit":
            card = self._context_card(step["context_index"])
            resp = c.post(
                f"/v1/sessions/{self.session_id}/cards/{card['card_id']}/edit",
                json={"new_text": step["new_text"]})
            return resp.status_code, resp.json()
        if op == "compare":
            card = self._context_card(step["context_index"])
            by_title = {m.title: m.id for m in self.state.corpus.materials.values()}
            resp = c.post(
                f"/v1/sessions/{self.session_id}/contexts/{card['card_id']}/compare",
                json={"material_a": by_title[step["a_title"]],
                      "material_b": by_title[step["b_title"]]})
            return resp.status_code, resp.json()
        if op == "plan":
            card = self._context_card(step["context_index"])
            resp = c.post(f"/v1/sessions/{self.session_id}/outcome/plan", json={
                "context_card_id": card["card_id"],
                "expected_lesson_count": step["lessons"]})
            if resp.status_code != 200:
                return resp.status_code, resp.json()
            return 200, self._wait(resp.json()["job_id"])
        if op == "activities":
            card = self._context_card(step["context_index"])
            resp = c.post(f"/v1/sessions/{self.session_id}/outcome/activities",
                          json={"context_card_id": card["card_id"]})
            if resp.status_code != 200:
                return resp.status_code, resp.json()
            return 200, self._wait(resp.json()["job_id"])
        if op == "delete_activity":
            resp = c.delete(
                f"/v1/sessions/{self.session_id}/outcome/activities/{step['title']}")
            return resp.status_code, resp.json()
        if op == "download":
            fmt = step.get("format", "txt")
            resp = c.get(
                f"/v1/sessions/{self.session_id}/outcome/download?format={fmt}")
            if resp.status_code == 200:
                self.exports[f"outcome.{fmt}"] = resp.content
                return 200, {"bytes": len(resp.content)}
            return resp.status_code, resp.json()
        raise click.ClickException(f"unknown script op {op!r}")


def _run(script_path: str, provider: ProviderConfig, out_dir: str | None):
    app = create_app(AppConfig(provider=provider))
    runner = ScriptRunner(app)
    script = json.loads(Path(script_path).read_text(encoding="utf-8"))
    ok = runner.run(script)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "transcript.jsonl").write_text(
            app.state.tw.gateway.transcript.dump(), encoding="utf-8")
        (out / "summary.json").write_text(
            json.dumps(runner.results, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8")
        for name, data in runner.exports.items():
            (out / name).write_bytes(data)
    return ok, app, runner


@main.command("run-script")
@click.argument("script", type=click.Path(exists=True))
@click.option("--fixtures", type=click.Path(exists=True), default=None,
              help="Replay fixture file; default is the scripted dev responder.")
@click.option("--provider-config", type=click.Path(exists=True), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--json", "as_json", is_flag=True)
def run_script(script, fixtures, provider_config, out_dir, as_json):
    """Exercise the full pipeline headlessly; nonzero exit on any step error."""
    provider = _provider_from(provider_config, None, fixtures)
    ok, _, runner = _run(script, provider, out_dir)
    if as_json:
        click.echo(json.dumps(runner.results, ensure_ascii=False))
    else:
        for r in runner.results:
            click.echo(f"{r['op']}: {r['status']}")
    sys.exit(0 if ok else 1)


@main.command("record-fixtures")
@click.argument("script", type=click.Path(exists=True))
@click.option("--provider-config", type=click.Path(exists=True), default=None,
              help="Live provider config; default is the scripted dev responder.")
@click.option("--out", type=click.Path(), required=True)
def record_fixtures(script, provider_config, out):
    """Run a script against a live provider and save replay fixtures."""
    provider = _provider_from(provider_config, None, None)
    ok, app, _ = _run(script, provider, None)
    fixtures = {}
    for exchange in app.state.tw.gateway.transcript.entries:
        fixtures[fixture_key(exchange.request)] = exchange.response
    save_fixtures(out, fixtures)
    click.echo(f"recorded {len(fixtures)} fixtures to {out}")
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
