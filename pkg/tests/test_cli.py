import math
import subprocess
import sys

import numpy as np
import pytest

from quadpeg.cli import _default_workers, render_svg
from quadpeg.curve import load_curve, validate

SQUARE_ARGS = ["0.5", "0.5", "1.5707963267948966"]


@pytest.fixture(scope="module")
def circle_file(tmp_path_factory, cli):
    path = tmp_path_factory.mktemp("curves") / "circle.txt"
    code, _, _ = cli(["gen-curve", "--kind", "circle", "--out", str(path)])
    assert code == 0
    return str(path)


@pytest.fixture(scope="module")
def ellipse_file(tmp_path_factory, cli):
    path = tmp_path_factory.mktemp("curves") / "ellipse.txt"
    code, _, _ = cli(["gen-curve", "--kind", "ellipse", "--a", "2", "--b", "1",
                      "--out", str(path)])
    assert code == 0
    return str(path)


@pytest.fixture(scope="module")
def random_file(tmp_path_factory, cli):
    path = tmp_path_factory.mktemp("curves") / "rand.txt"
    code, _, _ = cli(["gen-curve", "--kind", "random", "--seed", "4",
                      "--modes", "8", "--decay", "2.5", "--out", str(path)])
    assert code == 0
    return str(path)


@pytest.fixture(scope="module")
def fig8_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("curves") / "fig8.txt"
    path.write_text("fourier-curve v1\n2\n-2 1.0 0.0\n-1 0.0 0.0\n"
                    "0 0.0 0.0\n1 1.0 0.0\n2 0.0 0.0\n")
    return str(path)


class TestSolve:
    def test_circle_square(self, cli, circle_file):
        code, out, err = cli(["solve", circle_file] + SQUARE_ARGS)
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) >= 1
        fields = lines[0].split()
        assert len(fields) == 5
        vals = [float(f) for f in fields]
        assert vals[4] < 1e-9
        assert lines == sorted(lines, key=lambda ln: [float(v) for v in ln.split()])

    def test_ellipse_square_solution_present(self, cli, ellipse_file):
        code, out, _ = cli(["solve", ellipse_file] + SQUARE_ARGS)
        assert code == 0
        k = 2 / math.sqrt(5)
        target = np.array([k + 1j * k, -k + 1j * k, -k - 1j * k, k - 1j * k])
        curve = load_curve(ellipse_file)
        best = math.inf
        for ln in out.strip().splitlines():
            a, b, c, d, _ = (float(v) for v in ln.split())
            got = curve.eval(np.array([a, b, c, d]))
            for r in range(4):
                best = min(best, np.max(np.abs(np.roll(got, -r) - target)))
        assert best < 1e-8

    def test_eight_number_quad_spec(self, cli, circle_file):
        code, out, _ = cli(["solve", circle_file,
                            "1", "0", "0", "1", "-1", "0", "0", "-1"])
        assert code == 0
        assert out.strip()

    def test_invalid_curve_names_invariant(self, cli, fig8_file):
        code, out, err = cli(["solve", fig8_file] + SQUARE_ARGS)
        assert code == 1
        assert "embeddedness" in err

    def test_none_found_exit_two(self, cli, random_file):
        code, out, err = cli(["solve", random_file, "0.3", "0.41", "1.3",
                              "--max-iter", "1"])
        assert code == 2
        assert out.strip() == ""
        assert "no inscription found" in err

    def test_bad_quad_spec_count(self, cli, circle_file):
        code, _, err = cli(["solve", circle_file, "0.5", "0.5"])
        assert code == 1

    def test_grid_minimum_enforced(self, cli, circle_file):
        code, _, err = cli(["solve", circle_file, *SQUARE_ARGS, "--grid", "3"])
        assert code == 1
        assert "grid" in err

    def test_out_file(self, cli, random_file, tmp_path):
        out_path = tmp_path / "sols.txt"
        code, out, _ = cli(["solve", random_file, "0.3", "0.41", "1.3",
                            "--out", str(out_path)])
        assert code == 0
        assert out == ""
        assert out_path.read_text().strip()

    def test_workers_do_not_change_bytes(self, cli, random_file):
        code1, out1, _ = cli(["solve", random_file, "0.2", "0.3", "0.9",
                              "--workers", "1"])
        code2, out2, _ = cli(["solve", random_file, "0.2", "0.3", "0.9",
                              "--workers", "2"])
        assert code1 == code2 == 0
        assert out1 == out2


class TestParamsAndVertices:
    def test_square_params_exact_string(self, cli):
        code, out, _ = cli(["params", "-0.5", "0", "0", "-0.5",
                            "0.5", "0", "0", "0.5"])
        assert code == 0
        assert out == "0.5 0.5 1.5707963267948966\n"

    def test_not_cyclic(self, cli):
        code, _, err = cli(["params", "0", "0", "1", "-2", "3", "0", "1", "2"])
        assert code == 1
        assert "chord products" in err

    def test_roundtrip_through_vertices(self, cli):
        code, out, _ = cli(["vertices", "0.3", "0.45", "1.1"])
        assert code == 0
        code, out2, _ = cli(["params"] + out.split())
        assert code == 0
        s, t, phi = (float(v) for v in out2.split())
        assert max(abs(s - 0.3), abs(t - 0.45), abs(phi - 1.1)) < 1e-12

    def test_vertices_rejects_bad_params(self, cli):
        code, _, err = cli(["vertices", "0.7", "0.3", "1.0"])
        assert code == 1


class TestMaslov:
    def test_circle_factor_class(self, cli, circle_file):
        code, out, _ = cli(["maslov", circle_file, "1", "0",
                            "--weights", "0.5"])
        assert code == 0 and out == "2\n"

    def test_two_weight_form(self, cli, circle_file):
        code, out, _ = cli(["maslov", circle_file, "1", "1",
                            "--weights", "0.3", "0.7"])
        assert code == 0 and out == "4\n"

    def test_zero_class(self, cli, circle_file):
        code, out, _ = cli(["maslov", circle_file, "0", "0"])
        assert code == 0 and out == "0\n"

    def test_image_map(self, cli, random_file):
        code, out, _ = cli(["maslov", random_file, "1", "1",
                            "--map", "F_t", "--t", "0.3"])
        assert code == 0 and out == "4\n"
        code, out, _ = cli(["maslov", random_file, "1", "0",
                            "--map", "R_phi_F_s", "--s", "0.3", "--phi", "1.1"])
        assert code == 0 and out == "2\n"

    def test_resolution_exit_three(self, cli, random_file):
        code, _, err = cli(["maslov", random_file, "2", "2", "--samples", "16"])
        assert code == 3
        assert "--samples" in err

    def test_missing_map_parameter(self, cli, circle_file):
        code, _, err = cli(["maslov", circle_file, "1", "1", "--map", "F_t"])
        assert code == 1


class TestGenCurve:
    def test_circle_file_shape(self, cli, circle_file):
        text = open(circle_file).read()
        assert text.splitlines()[0] == "fourier-curve v1"
        assert len(text.splitlines()) == 5

    def test_fixed_seed_byte_identical(self, cli, tmp_path):
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        for p in (p1, p2):
            code, _, _ = cli(["gen-curve", "--kind", "random", "--seed", "7",
                              "--out", str(p)])
            assert code == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_random_revalidates_on_load(self, cli, random_file):
        curve = load_curve(random_file)
        assert validate(curve).ok


class TestRender:
    def test_structure(self, cli, random_file, tmp_path):
        sols = tmp_path / "sols.txt"
        code, _, _ = cli(["solve", random_file, "0.3", "0.41", "1.3",
                          "--out", str(sols)])
        assert code == 0
        n_sols = len(sols.read_text().strip().splitlines())
        out = tmp_path / "fig.svg"
        code, _, _ = cli(["render", random_file, str(sols), "--out", str(out)])
        assert code == 0
        svg = out.read_text()
        assert svg.startswith("<?xml")
        assert 'version="1.1"' in svg
        assert svg.count("<path") == 1
        assert svg.count("<polygon") == n_sols
        assert svg.count('class="diag') == 2 * n_sols
        assert svg.count("<text") == 4 * n_sols
        for lbl in "ABCD":
            assert f">{lbl}</text>" in svg

    def test_distinct_style_classes(self, cli, circle_file, tmp_path):
        sols = tmp_path / "two.txt"
        sols.write_text("0.0 0.25 0.5 0.75 0.0\n0.1 0.35 0.6 0.85 0.0\n")
        out = tmp_path / "two.svg"
        code, _, _ = cli(["render", circle_file, str(sols), "--out", str(out)])
        assert code == 0
        svg = out.read_text()
        assert "quad-0" in svg and "quad-1" in svg
        assert "c0" in svg and "c1" in svg

    def test_empty_inscriptions(self, cli, circle_file, tmp_path):
        sols = tmp_path / "none.txt"
        sols.write_text("")
        out = tmp_path / "curve_only.svg"
        code, _, _ = cli(["render", circle_file, str(sols), "--out", str(out)])
        assert code == 0
        svg = out.read_text()
        assert svg.count("<polygon") == 0
        assert svg.count("<path") == 1

    def test_deterministic_bytes(self, cli, random_file, tmp_path):
        outs = []
        for name in ("r1.svg", "r2.svg"):
            out = tmp_path / name
            code, _, _ = cli(["render", random_file, "--out", str(out)])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_malformed_inscription_file(self, cli, circle_file, tmp_path):
        sols = tmp_path / "bad.txt"
        sols.write_text("0.1 0.2 0.3\n")
        code, _, err = cli(["render", circle_file, str(sols),
                            "--out", str(tmp_path / "x.svg")])
        assert code == 1


class TestTopLevel:
    def test_help_exits_zero(self, cli):
        code, _, _ = cli(["--help"])
        assert code == 0

    def test_unknown_command_exits_one(self, cli):
        code, _, _ = cli(["frobnicate"])
        assert code == 1

    def test_missing_curve_file(self, cli):
        code, _, err = cli(["solve", "/nonexistent/curve.txt"] + SQUARE_ARGS)
        assert code == 1

    def test_workers_env_default(self, monkeypatch):
        monkeypatch.setenv("PEG_SOLVER_THREADS", "3")
        assert _default_workers() == 3
        monkeypatch.setenv("PEG_SOLVER_THREADS", "junk")
        assert _default_workers() == 1
        monkeypatch.delenv("PEG_SOLVER_THREADS")
        assert _default_workers() == 1

    def test_console_entry_point(self, circle_file):
        proc = subprocess.run(
            [sys.executable, "-m", "quadpeg.cli", "maslov", circle_file,
             "1", "0"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout == "2\n"
