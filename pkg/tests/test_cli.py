import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from bhtsne import load_matrix, save_matrix
from bhtsne.cli import main
from bhtsne.optimizer import STAGES


@pytest.fixture
def dataset(tmp_path, rng):
    centers = np.array([[0.0, 0.0, 0.0], [8.0, 8.0, 8.0]])
    pts = np.vstack([c + rng.standard_normal((30, 3)) for c in centers])
    path = tmp_path / "data.csv"
    save_matrix(pts, path, format="csv")
    return path


def embed_args(dataset, out, **extra):
    args = ["embed", "--input", str(dataset), "--out", str(out),
            "--perplexity", "5", "--iters", "50",
            "--exaggeration-iters", "20", "--seed", "1"]
    for key, val in extra.items():
        args.extend([f"--{key.replace('_', '-')}", str(val)])
    return args


def test_embed_writes_outputs(tmp_path, dataset):
    out = tmp_path / "emb.csv"
    assert main(embed_args(dataset, out)) == 0
    emb = load_matrix(out, format="csv")
    assert emb.n_points == 60
    assert emb.n_dims == 2
    manifest = json.loads((tmp_path / "emb.csv.manifest.json").read_text())
    assert "kl" in manifest and np.isfinite(manifest["kl"])
    assert manifest["seed"] == 1
    assert manifest["input"]["sha256"]
    timings = json.loads((tmp_path / "emb.csv.timings.json").read_text())
    assert set(timings) == set(STAGES)


def test_embed_bad_perplexity_exits_2(tmp_path, dataset, capsys):
    with pytest.raises(SystemExit) as exc:
        main(embed_args(dataset, tmp_path / "e.csv", perplexity="0.5"))
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "perplexity" in err and "> 1" in err


def test_embed_missing_input_exits_1(tmp_path, capsys):
    rc = main(["embed", "--input", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "e.csv")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_embed_thread_determinism(tmp_path, dataset):
    outs = []
    for threads in (1, 8):
        out = tmp_path / f"emb{threads}.bin"
        assert main(embed_args(dataset, out, threads=threads)) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_embed_rerun_from_manifest(tmp_path, dataset):
    out1 = tmp_path / "a.bin"
    assert main(embed_args(dataset, out1)) == 0
    out2 = tmp_path / "b.bin"
    assert main(["embed", "--from-manifest", str(tmp_path / "a.bin.manifest.json"),
                 "--input", str(dataset), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_profile_table_and_json(tmp_path, dataset, capsys):
    tj = tmp_path / "timings.json"
    rc = main(["profile", "--input", str(dataset), "--perplexity", "5",
               "--iters", "30", "--exaggeration-iters", "10",
               "--timings-out", str(tj)])
    assert rc == 0
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln and not ln.startswith("wall")]
    body = [ln for ln in lines[1:] if not ln.startswith("total")]
    names = [ln.split()[0] for ln in body]
    assert names == list(STAGES)
    pcts = [float(ln.split()[-1].rstrip("%")) for ln in body]
    assert abs(sum(pcts) - 100.0) <= 0.5
    report = json.loads(tj.read_text())
    assert set(report) == set(STAGES)
    for s in STAGES:
        assert report[s]["total_s"] >= 0


def test_plot_svg(tmp_path):
    emb = tmp_path / "emb.csv"
    save_matrix(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]]), emb,
                format="csv")
    labels = tmp_path / "labels.txt"
    labels.write_text("0\n1\n0\n")
    out = tmp_path / "plot.svg"
    rc = main(["plot", "--input", str(emb), "--labels", str(labels),
               "--out", str(out)])
    assert rc == 0
    root = ET.fromstring(out.read_text())
    circles = root.findall(".//{http://www.w3.org/2000/svg}circle")
    assert len(circles) == 3
    fills = {c.get("fill") for c in circles}
    assert len(fills) == 2


def test_plot_without_labels_single_color(tmp_path):
    emb = tmp_path / "emb.csv"
    save_matrix(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]), emb,
                format="csv")
    out = tmp_path / "plot.svg"
    assert main(["plot", "--input", str(emb), "--out", str(out)]) == 0
    root = ET.fromstring(out.read_text())
    circles = root.findall(".//{http://www.w3.org/2000/svg}circle")
    assert len({c.get("fill") for c in circles}) == 1


def test_plot_viewport_margin(tmp_path, rng):
    emb = tmp_path / "emb.csv"
    save_matrix(rng.standard_normal((50, 2)) * 10, emb, format="csv")
    out = tmp_path / "plot.svg"
    assert main(["plot", "--input", str(emb), "--out", str(out)]) == 0
    root = ET.fromstring(out.read_text())
    side = float(root.get("width"))
    margin = 0.05 * side
    for c in root.findall(".//{http://www.w3.org/2000/svg}circle"):
        cx, cy = float(c.get("cx")), float(c.get("cy"))
        assert margin - 1e-6 <= cx <= side - margin + 1e-6
        assert margin - 1e-6 <= cy <= side - margin + 1e-6


def test_plot_label_mismatch(tmp_path, capsys):
    emb = tmp_path / "emb.csv"
    save_matrix(np.array([[0.0, 0.0], [1.0, 1.0]]), emb, format="csv")
    labels = tmp_path / "labels.txt"
    labels.write_text("0\n1\n2\n")
    rc = main(["plot", "--input", str(emb), "--labels", str(labels),
               "--out", str(tmp_path / "p.svg")])
    assert rc == 1
    assert "label count" in capsys.readouterr().err


def test_kl_matches_manifest(tmp_path, dataset, capsys):
    out = tmp_path / "emb.bin"
    assert main(embed_args(dataset, out)) == 0
    manifest = json.loads((tmp_path / "emb.bin.manifest.json").read_text())
    jout = tmp_path / "kl.json"
    rc = main(["kl", "--input", str(dataset), "--embedding", str(out),
               "--perplexity", "5", "--json-out", str(jout)])
    assert rc == 0
    assert f"kl={manifest['kl']:.6f}" in capsys.readouterr().out
    kl = json.loads(jout.read_text())["kl"]
    assert abs(kl - manifest["kl"]) <= 1e-9


def test_kl_n_mismatch(tmp_path, dataset, rng, capsys):
    emb = tmp_path / "short.csv"
    save_matrix(rng.standard_normal((10, 2)), emb, format="csv")
    rc = main(["kl", "--input", str(dataset), "--embedding", str(emb),
               "--perplexity", "5"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "10" in err and "60" in err


def test_kl_deterministic(tmp_path, dataset, capsys):
    out = tmp_path / "emb.bin"
    assert main(embed_args(dataset, out)) == 0
    capsys.readouterr()  # drop the embed command's output
    lines = []
    for _ in range(2):
        assert main(["kl", "--input", str(dataset), "--embedding", str(out),
                     "--perplexity", "5"]) == 0
        lines.append(capsys.readouterr().out)
    assert lines[0] == lines[1]
