import json
import math

import pytest

from fractal_tiling_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestDim:
    def test_carpet(self, capsys):
        code, out = run(capsys, "dim", "--preset", "carpet", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["rows"]["D"]["value"] == pytest.approx(1.892789, abs=1e-6)
        assert doc["rows"]["eta"]["value"] == pytest.approx(math.log(3), abs=1e-9)
        assert doc["rows"]["lattice"]["value"] is True

    def test_cantor(self, capsys):
        code, out = run(capsys, "dim", "--preset", "cantor", "--format", "json")
        doc = json.loads(out)
        assert doc["rows"]["D"]["value"] == pytest.approx(0.630930, abs=1e-6)

    def test_nonlattice_scene_file(self, capsys, tmp_path):
        scene = {
            "name": "halfthird",
            "ifs": {
                "dim": 1,
                "maps": [
                    {"ratio": 0.5, "translation": [0.0]},
                    {"ratio": 1 / 3, "translation": [2 / 3]},
                ],
            },
            "region": {"type": "intervals", "intervals": [[0.0, 1.0]]},
            "delta": 2.0**-12,
            "f_bbox": [[0.0], [1.0]],
        }
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(scene))
        code, out = run(capsys, "dim", "--scene", str(path), "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["rows"]["lattice"]["value"] is False


class TestContent:
    def test_carpet_rows_agree(self, capsys, carpet_bundle):
        code, out = run(
            capsys, "content", "--preset", "carpet", "--format", "json",
            "--methods", "generator_integral,relative_generator,direct_average",
        )
        assert code == 0
        doc = json.loads(out)
        rows = doc["rows"]
        assert all("value" in rows[m] for m in rows)
        assert all(rel <= 0.03 for rel in doc["pairwise_relative_difference"].values())
        assert doc["checks"]["compatible"]["verdict"] == "pass"

    def test_koch_generator_marked_not_applicable(self, capsys, koch_bundle):
        code, out = run(
            capsys, "content", "--preset", "koch", "--format", "json",
            "--methods", "generator_integral,relative_generator,direct_average",
        )
        assert code == 0
        doc = json.loads(out)
        assert "not applicable" in doc["rows"]["generator_integral"]["note"]
        assert "generator_integral" not in " ".join(doc["pairwise_relative_difference"])

    def test_cantor_band_on_limit_row(self, capsys, cantor_bundle):
        code, out = run(
            capsys, "content", "--preset", "cantor", "--format", "json",
            "--methods", "direct_limit,direct_average",
        )
        doc = json.loads(out)
        assert "band" in doc["rows"]["direct_limit"]
        band = doc["rows"]["direct_limit"]["band"]
        assert band[1] > band[0]

    def test_refusal_exit_code(self, capsys, tmp_path):
        scene = {
            "name": "cantor_overhang",
            "ifs": {
                "dim": 1,
                "maps": [
                    {"ratio": 1 / 3, "translation": [0.0]},
                    {"ratio": 1 / 3, "translation": [2 / 3]},
                ],
            },
            "region": {"type": "intervals", "intervals": [[-0.6, 1.0]]},
            "delta": 2.0**-13,
            "f_bbox": [[0.0], [1.0]],
        }
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(scene))
        code, out = run(capsys, "content", "--scene", str(path), "--format", "json",
                        "--methods", "relative_generator")
        assert code == 2
        doc = json.loads(out)
        assert "refused" in doc["rows"]["relative_generator"]

    def test_config_error_exit_code(self, capsys):
        assert main(["dim", "--preset", "nosuch"]) == 3
        assert main(["dim"]) == 3


class TestCheckCommand:
    def test_carpet_all_pass(self, capsys, carpet_bundle):
        code, out = run(capsys, "check", "--preset", "carpet", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        for name in ("osc", "strong", "compatible", "projection"):
            assert doc["rows"][name]["verdict"] == "pass"

    def test_koch_compatibility_fails(self, capsys, koch_bundle):
        code, out = run(capsys, "check", "--preset", "koch", "--format", "json")
        doc = json.loads(out)
        assert doc["rows"]["compatible"]["verdict"] == "fail"
        assert doc["rows"]["projection"]["verdict"] == "pass"


class TestCurvatureCommand:
    def test_carpet_k1(self, capsys, carpet_bundle):
        code, out = run(capsys, "curvature", "--preset", "carpet", "-k", "1", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        gen = doc["rows"]["generator_integral"]["value"]
        rel = doc["rows"]["relative_generator"]["value"]
        assert abs(gen - rel) / abs(gen) <= 0.05


class TestRenderAndDeterminism:
    def test_render_outputs(self, capsys, tmp_path, cantor_bundle):
        code, _ = run(capsys, "render", "--preset", "cantor", "--out", str(tmp_path))
        assert code == 0
        names = {p.name for p in tmp_path.iterdir()}
        assert "cantor_G.pgm" in names
        assert "cantor_Gamma.pgm" in names
        assert "cantor_tiles.pgm" in names
        assert any(n.startswith("cantor_Feps") for n in names)

    def test_render_svg_for_2d(self, capsys, tmp_path, gasket_bundle):
        code, _ = run(capsys, "render", "--preset", "gasket", "--out", str(tmp_path))
        assert code == 0
        svg = tmp_path / "gasket_contour.svg"
        assert svg.exists()
        assert svg.read_text().startswith("<svg")

    def test_byte_identical_json(self, capsys, tmp_path, cantor_bundle):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run(capsys, "content", "--preset", "cantor", "--out", str(a), "--format", "json",
            "--methods", "generator_integral,direct_average")
        run(capsys, "content", "--preset", "cantor", "--out", str(b), "--format", "json",
            "--methods", "generator_integral,direct_average")
        fa = (a / "content_cantor.json").read_bytes()
        fb = (b / "content_cantor.json").read_bytes()
        assert fa == fb

    def test_presets_listing(self, capsys):
        code, out = run(capsys, "presets", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert {"cantor", "carpet", "koch", "gasket"} <= set(doc["rows"])
        for preset in doc["rows"].values():
            for item in preset["expected"].values():
                assert item["tag"] in ("TRIVIAL", "DERIVED")

    def test_table_format_runs(self, capsys, cantor_bundle):
        code, out = run(capsys, "dim", "--preset", "cantor", "--format", "table")
        assert code == 0
        assert "D" in out
