import json
from importlib import resources
from pathlib import Path

from click.testing import CliRunner

from themeweaver.cli import main

DEMO_SCRIPT = Path(__file__).resolve().parent.parent / "scripts" / "demo_session.json"


def data_file(name):
    return str(resources.files("themeweaver.data") / name)


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


class TestCorpusImport:
    def test_pool_import_counts(self, tmp_path):
        corpus_dir = tmp_path / "corpus"
        result = run(["corpus-import", data_file("pool_informal.jsonl"),
                      "--corpus-dir", str(corpus_dir), "--json"])
        assert result.exit_code == 0
        assert json.loads(result.output) == {"imported": 12, "duplicates": []}

    def test_reimport_reports_duplicates(self, tmp_path):
        corpus_dir = tmp_path / "corpus"
        run(["corpus-import", data_file("pool_informal.jsonl"),
             "--corpus-dir", str(corpus_dir)])
        result = run(["corpus-import", data_file("pool_informal.jsonl"),
                      "--corpus-dir", str(corpus_dir), "--json"])
        summary = json.loads(result.output)
        assert summary["imported"] == 0
        assert len(summary["duplicates"]) == 12

    def test_materials_import(self, tmp_path):
        corpus_dir = tmp_path / "corpus"
        result = run(["corpus-import", data_file("sample_materials.jsonl"),
                      "--materials", "--corpus-dir", str(corpus_dir), "--json"])
        assert json.loads(result.output)["imported"] == 10

    def test_export_round_trip(self, tmp_path):
        corpus_dir = tmp_path / "corpus"
        run(["corpus-import", data_file("pool_informal.jsonl"),
             "--corpus-dir", str(corpus_dir)])
        run(["corpus-import", data_file("pool_subjects.jsonl"),
             "--corpus-dir", str(corpus_dir)])
        result = run(["corpus-export", "--corpus-dir", str(corpus_dir)])
        bundled = (Path(data_file("pool_informal.jsonl")).read_text(encoding="utf-8")
                   + Path(data_file("pool_subjects.jsonl")).read_text(encoding="utf-8"))
        # export sorts by (subject, title); informal sorts before the others
        assert sorted(result.output.splitlines()) == sorted(bundled.splitlines())


class TestRunScript:
    def test_demo_script_succeeds(self, tmp_path):
        out = tmp_path / "run"
        result = run(["run-script", str(DEMO_SCRIPT), "--out-dir", str(out), "--json"])
        assert result.exit_code == 0, result.output
        steps = json.loads(result.output)
        assert all(s["status"] < 400 for s in steps)
        assert (out / "transcript.jsonl").exists()
        assert (out / "outcome.txt").exists()
        assert (out / "outcome.html").exists()
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert [s["op"] for s in summary] == [s["op"] for s in steps]

    def test_failing_step_exits_nonzero(self, tmp_path):
        script = tmp_path / "bad.json"
        script.write_text(json.dumps({"steps": [
            {"op": "import_bundled_corpus"},
            {"op": "create_session", "subjects": ["science"],
             "material_titles": []},
            {"op": "recommend"},
        ]}), encoding="utf-8")
        result = run(["run-script", str(script)])
        assert result.exit_code == 1

    def test_scripted_runs_are_deterministic(self, tmp_path):
        outputs = []
        for i in range(2):
            out = tmp_path / f"run{i}"
            result = run(["run-script", str(DEMO_SCRIPT), "--out-dir", str(out)])
            assert result.exit_code == 0
            outputs.append({
                name: (out / name).read_bytes()
                for name in ("transcript.jsonl", "outcome.txt", "outcome.html")
            })
        assert outputs[0] == outputs[1]


class TestRecordReplay:
    def test_record_then_replay(self, tmp_path):
        fixtures = tmp_path / "fixtures.json"
        result = run(["record-fixtures", str(DEMO_SCRIPT), "--out", str(fixtures)])
        assert result.exit_code == 0, result.output
        assert fixtures.exists()
        from themeweaver.gateway import load_fixtures

        recorded = load_fixtures(fixtures)
        assert recorded

        out = tmp_path / "replayed"
        result = run(["run-script", str(DEMO_SCRIPT),
                      "--fixtures", str(fixtures), "--out-dir", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "outcome.txt").exists()
