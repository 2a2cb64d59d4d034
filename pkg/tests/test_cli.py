import json
import subprocess
import sys

import numpy as np
import pytest

from treefield.cli import main, parse_scalar_map
from treefield.engine import btfi_integrate
from treefield.errors import ParseError
from treefield.graphs import TensorField, WeightedTree, path_with_random_edges
from treefield import maps


def write_tree(tmp_path, edges, name="tree.txt"):
    p = tmp_path / name
    p.write_text("".join(f"{u} {v} {w!r}\n" for u, v, w in edges))
    return p


def write_field(tmp_path, data, name="field.csv"):
    p = tmp_path / name
    lines = ["vertex," + ",".join(f"x{j}" for j in range(data.shape[1]))]
    for i, row in enumerate(data):
        lines.append(str(i) + "," + ",".join(repr(float(v)) for v in row))
    p.write_text("\n".join(lines) + "\n")
    return p


class TestScalarMapSpecs:
    @pytest.mark.parametrize("spec,cls", [
        ("poly:0,1", maps.Polynomial),
        ("exp:-0.5", maps.Exponential),
        ("exppoly:-0.5;1,0.5", maps.ExpTimesPoly),
        ("trig:cos", maps.Trigonometric),
        ("trig:sin,0.7", maps.Trigonometric),
        ("rat:1,1/2,0,1", maps.Rational),
        ("expoverlin:-0.2,1.5", maps.ExpOverLinear),
        ("expquad:-0.1,0,0", maps.ExpQuadratic),
        ("gauss:1.5", maps.ExpQuadratic),
    ])
    def test_valid_specs(self, spec, cls):
        assert isinstance(parse_scalar_map(spec), cls)

    @pytest.mark.parametrize("spec", ["nope:1", "poly:", "exp:abc", "trig:tan"])
    def test_invalid_specs(self, spec):
        with pytest.raises(ParseError):
            parse_scalar_map(spec)


class TestIntegrate:
    def test_matches_hand_btfi(self, tmp_path, capsys):
        edges = [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5)]
        tree_path = write_tree(tmp_path, edges)
        field = np.arange(8.0).reshape(4, 2)
        field_path = write_field(tmp_path, field)
        out_path = tmp_path / "out.csv"
        rc = main(["integrate", "--tree", str(tree_path), "--f", "poly:0,1",
                   "--field", str(field_path), "--out", str(out_path)])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["schema_version"] == "1"
        assert summary["n"] == 4

        t = WeightedTree.from_edges(4, edges)
        expected = btfi_integrate(t, maps.Polynomial([0.0, 1.0]),
                                  TensorField.from_array(field)).data
        got = np.loadtxt(out_path, delimiter=",", skiprows=2)[:, 1:]
        assert np.allclose(got, expected, rtol=1e-12)
        header = out_path.read_text().splitlines()
        assert header[0].startswith("# schema:")
        assert header[1] == "vertex,x0,x1"

    def test_exponential_map_positive_outputs(self, tmp_path, capsys):
        tree_path = write_tree(tmp_path, [(i, i + 1, 1.0) for i in range(7)])
        field_path = write_field(tmp_path, np.ones((8, 1)))
        rc = main(["integrate", "--tree", str(tree_path), "--f", "exp:-0.5",
                   "--field", str(field_path), "--out", str(tmp_path / "o.csv")])
        assert rc == 0
        got = np.loadtxt(tmp_path / "o.csv", delimiter=",", skiprows=2)[:, 1:]
        assert np.isfinite(got).all() and (got > 0).all()

    def test_malformed_map_exits_2(self, tmp_path, capsys):
        tree_path = write_tree(tmp_path, [(0, 1, 1.0)])
        rc = main(["integrate", "--tree", str(tree_path), "--f", "wat:1"])
        assert rc == 2

    def test_graph_input_uses_mst(self, tmp_path, capsys):
        g = path_with_random_edges(30, 20, seed=1)
        graph_path = write_tree(tmp_path, g.edges, name="graph.txt")
        rc = main(["integrate", "--graph", str(graph_path), "--f", "poly:1",
                   "--random", "2", "--seed", "3"])
        assert rc == 0

    def test_missing_file_exits_2(self):
        assert main(["integrate", "--tree", "/nonexistent", "--f", "poly:1"]) == 2

    def test_non_tree_with_tree_flag_exits_3(self, tmp_path):
        g = path_with_random_edges(10, 5, seed=1)
        path = write_tree(tmp_path, g.edges, name="g.txt")
        assert main(["integrate", "--tree", str(path), "--f", "poly:1"]) == 3


class TestBench:
    def test_row_counts_and_diff_column(self, tmp_path):
        out = tmp_path / "bench.csv"
        rc = main(["bench", "--sizes", "64,128", "--repeats", "2",
                   "--f", "poly:1,-0.5", "--out", str(out), "--seed", "1"])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# schema: bench-csv v1"
        assert lines[1] == "n,method,phase,seconds,repeat,max_abs_diff,strategies"
        rows = [line.split(",") for line in lines[2:]]
        for n in ("64", "128"):
            ftfi_int = [r for r in rows if r[0] == n and r[1] == "FTFI" and r[2] == "integrate"]
            btfi_int = [r for r in rows if r[0] == n and r[1] == "BTFI" and r[2] == "integrate"]
            assert len(ftfi_int) == 2
            assert len(btfi_int) == 2
            for r in ftfi_int:
                assert float(r[5]) <= 1e-9

    def test_mesh_kind_requires_dir(self):
        assert main(["bench", "--kind", "mesh"]) == 2


class TestFitAndEval:
    def test_fit_then_eval_round_trip(self, tmp_path, capsys):
        g = path_with_random_edges(60, 45, seed=5)
        graph_path = write_tree(tmp_path, g.edges, name="graph.txt")
        out = tmp_path / "fit.json"
        rc = main(["fit", "--graph", str(graph_path), "--samples", "80",
                   "--steps", "60", "--seed", "0", "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["eps_after"] < payload["eps_before"]
        assert payload["loss_trace"][-1] <= payload["loss_trace"][0]

        params = tmp_path / "params.json"
        params.write_text(json.dumps(payload["params"]))
        capsys.readouterr()
        rc = main(["eval-eps", "--graph", str(graph_path), "--params", str(params)])
        assert rc == 0
        eps = json.loads(capsys.readouterr().out)["eps"]
        assert eps == pytest.approx(payload["eps_after"], rel=1e-12)

    def test_tree_input_zero_eps_before(self, tmp_path, capsys):
        tree_path = write_tree(tmp_path, [(i, i + 1, 0.5 + 0.1 * i) for i in range(20)])
        rc = main(["fit", "--graph", str(tree_path), "--samples", "40",
                   "--steps", "5", "--seed", "0"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["eps_before"] == 0.0

    def test_missing_params_exits_2(self, tmp_path):
        tree_path = write_tree(tmp_path, [(0, 1, 1.0)])
        assert main(["eval-eps", "--graph", str(tree_path),
                     "--params", str(tmp_path / "missing.json")]) == 2


class TestFeatures:
    def test_three_tiny_trees(self, tmp_path, capsys):
        d = tmp_path / "graphs"
        d.mkdir()
        for i, n in enumerate((12, 15, 18)):
            write_tree(d, [(j, j + 1, 1.0 + 0.1 * j) for j in range(n - 1)],
                       name=f"tree{i}.txt")
        out = tmp_path / "features.csv"
        rc = main(["features", "--graphs", str(d), "--k", "4", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# schema: features-csv v1"
        assert lines[1] == "graph_id,ev_1,ev_2,ev_3,ev_4"
        assert len(lines) == 5
        for line in lines[2:]:
            assert len(line.split(",")) == 5

    def test_matches_dense_oracle(self, tmp_path, capsys):
        from treefield.graphs import all_pairs_distances, minimum_spanning_tree, load_edge_list

        d = tmp_path / "graphs"
        d.mkdir()
        g = path_with_random_edges(40, 25, seed=7)
        write_tree(d, g.edges, name="g0.txt")
        out = tmp_path / "features.csv"
        rc = main(["features", "--graphs", str(d), "--k", "3", "--f", "poly:0,1",
                   "--out", str(out)])
        assert rc == 0
        row = out.read_text().splitlines()[2].split(",")
        got = np.array([float(v) for v in row[1:]])
        tree = minimum_spanning_tree(load_edge_list(d / "g0.txt"))
        ref = np.linalg.eigvalsh(all_pairs_distances(tree))[:3]
        assert np.abs(got - ref).max() <= 1e-6

    def test_empty_directory_header_only(self, tmp_path, capsys):
        d = tmp_path / "graphs"
        d.mkdir()
        rc = main(["features", "--graphs", str(d)])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("graph_id,ev_1")


class TestMeshInterpolate:
    def test_bundled_mesh_btfi_check(self, tmp_path, capsys):
        out = tmp_path / "mesh.json"
        rc = main(["mesh-interpolate", "--off", "tests/data/sphere_642.off",
                   "--mask-fraction", "0.8", "--lambda-grid", "0.1,1",
                   "--seed", "0", "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["btfi_relative_diff"] <= 1e-8
        assert payload["best"]["mean_cosine"] > 0
        assert payload["masked"] == round(0.8 * 642)

    def test_zero_mask_fraction_vacuous(self, capsys):
        rc = main(["mesh-interpolate", "--off", "tests/data/sphere_642.off",
                   "--mask-fraction", "0", "--lambda-grid", "1"])
        assert rc == 0
        captured = capsys.readouterr()
        assert "convention" in captured.err
        assert json.loads(captured.out)["best"]["mean_cosine"] == 1.0

    def test_lambda_zero_constant_kernel(self, capsys):
        rc = main(["mesh-interpolate", "--off", "tests/data/sphere_642.off",
                   "--mask-fraction", "0.5", "--lambda-grid", "0", "--seed", "1"])
        assert rc == 0
        # constant kernel sums known normals identically at every vertex;
        # on a symmetric sphere that sum is near zero, cosine near zero
        payload = json.loads(capsys.readouterr().out)
        assert payload["results"][0]["lambda"] == 0.0

    def test_bad_fraction_exits_3(self):
        assert main(["mesh-interpolate", "--off", "tests/data/sphere_642.off",
                     "--mask-fraction", "1.5"]) == 3


class TestAttentionDemo:
    def test_deviation_small(self, capsys):
        rc = main(["attention-demo", "--grid", "8,8", "--phi", "square",
                   "--g", "exp", "--coeffs", "0.1,-0.4", "--seed", "0"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["max_relative_deviation"] <= 1e-6
        assert payload["tokens"] == 64

    def test_zero_coeffs_matches_unmasked(self, capsys):
        rc = main(["attention-demo", "--grid", "4,4", "--coeffs", "0,0",
                   "--g", "exp", "--seed", "2"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["max_relative_deviation"] <= 1e-8

    def test_reciprocal_pole_clean_error(self, capsys):
        rc = main(["attention-demo", "--grid", "4,4", "--g", "recip",
                   "--coeffs", "1,-1", "--seed", "0"])
        assert rc == 4


def test_console_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "treefield", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "integrate" in proc.stdout


def test_console_entry_point_argparse_error_code():
    proc = subprocess.run([sys.executable, "-m", "treefield", "integrate"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
