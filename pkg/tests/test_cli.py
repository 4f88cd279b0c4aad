import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import champernowne_prefix, count_loop
from symfreq import Alphabet, count_prefix, gen_bernoulli, gen_champernowne, gen_periodic
from symfreq.cli import main
from symfreq.serialize import TRACE_COLUMNS, format_decimal, format_rational

GOLDEN_ARGS = ["--seed", "42", "--checkpoints", "10,100,1000,10000,100000,1000000"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCount:
    def test_binary(self, capsys, write_file):
        code, out, _ = run(capsys, "count", write_file("a", "0110"), "--base", 2)
        assert code == 0
        doc = json.loads(out)
        assert doc["counts"] == [2, 2] and doc["measure"] == ["1/2", "1/2"] and doc["n"] == 4

    def test_prefix(self, capsys, write_file):
        code, out, _ = run(capsys, "count", write_file("a", "0120"), "--base", 3, "--n", 3)
        assert code == 0 and json.loads(out)["counts"] == [1, 1, 1]

    def test_decode_error(self, capsys, write_file):
        code, out, err = run(capsys, "count", write_file("a", "0120"), "--base", 2)
        assert code == 2 and out == ""
        assert "offset 2" in err

    def test_empty_input(self, capsys, write_file):
        code, _, err = run(capsys, "count", write_file("a", "\n"), "--base", 2)
        assert code == 2 and "frequency undefined at n=0" in err

    def test_zero_prefix(self, capsys, write_file):
        code, _, err = run(capsys, "count", write_file("a", "01"), "--n", 0)
        assert code == 2 and "n=0" in err

    def test_prefix_too_long(self, capsys, write_file):
        code, _, err = run(capsys, "count", write_file("a", "01"), "--n", 5)
        assert code == 2 and "n=5" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "count", tmp_path / "missing")
        assert code == 2 and err

    def test_csv(self, capsys, write_file):
        code, out, _ = run(capsys, "count", write_file("a", "0112"), "--base", 3, "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows == [["n", "m", "counts", "measure"], ["4", "3", "1 2 1", "1/4 1/2 1/4"]]

    def test_raw_parallel(self, capsys, write_file):
        path = write_file("r.bin", bytes(range(256)) * 40)
        for par in (1, 4):
            code, out, _ = run(capsys, "count", path, "--base", 256, "--decode", "raw", "--parallel", par)
            assert code == 0
            doc = json.loads(out)
            assert doc["counts"] == [40] * 256 and doc["measure"] == ["1/256"] * 256


class TestTrace:
    def test_periodic_uniform(self, capsys):
        code, out, _ = run(capsys, "trace", "--gen", "periodic:01", "--checkpoints", "2,4,8", "--target", "uniform")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["rows"]) == 3
        for row in doc["rows"]:
            assert row["tv_to_target"] == "0" and row["sup_dev_to_target"] == "0"

    def test_champernowne(self, capsys):
        code, out, _ = run(capsys, "trace", "--gen", "champernowne", "--base", 2, "--checkpoints", 15)
        assert code == 0
        row = json.loads(out)["rows"][0]
        assert row["numerators"] == count_loop(champernowne_prefix(2, 15), 15, 2) == [5, 10]
        assert row["sup_dev_to_target"] == "1/6"

    @pytest.mark.parametrize(
        "spec,golden",
        [
            (["bernoulli:1/2,1/2"], "trace_bernoulli_half_seed42.json"),
            (["bernoulli:1/5,3/10,1/2", "--target", "1/5,3/10,1/2"], "trace_bernoulli_5_3_2_seed42.json"),
        ],
    )
    @pytest.mark.parametrize("par", [1, 4])
    def test_golden_json(self, capsys, golden_dir, spec, golden, par):
        code, out, _ = run(capsys, "trace", "--gen", *spec, *GOLDEN_ARGS, "--parallel", par)
        assert code == 0
        assert out.encode() == (golden_dir / golden).read_bytes()

    def test_golden_csv(self, capsys, golden_dir):
        code, out, _ = run(
            capsys, "trace", "--gen", "bernoulli:1/5,3/10,1/2", "--target", "1/5,3/10,1/2",
            *GOLDEN_ARGS, "--format", "csv",
        )
        assert code == 0
        assert out.encode() == (golden_dir / "trace_bernoulli_5_3_2_seed42.csv").read_bytes()

    def test_golden_rows_match_library(self, golden_dir):
        doc = json.loads((golden_dir / "trace_bernoulli_half_seed42.json").read_text())
        seq = gen_bernoulli(["1/2", "1/2"], 42).take(10**6)
        for row in doc["rows"]:
            assert row["numerators"] == list(count_prefix(seq, row["n"], Alphabet(2)).counts)

    def test_unreachable_checkpoint(self, capsys, write_file):
        path = write_file("a", "01" * 500)
        code, _, err = run(capsys, "trace", path, "--checkpoints", "10,1000000")
        assert code == 2 and "n=1000000" in err

    def test_geometric_file(self, capsys, write_file):
        path = write_file("a", "0110" * 25)
        code, out, _ = run(capsys, "trace", path, "--geometric", 2, "--format", "csv")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [int(r["n"]) for r in rows] == [1, 2, 4, 8, 16, 32, 64]

    def test_geometric_generator_needs_bound(self, capsys):
        code, _, err = run(capsys, "trace", "--gen", "champernowne", "--geometric", 10)
        assert code == 2
        code, out, _ = run(capsys, "trace", "--gen", "champernowne", "--geometric", 10, "--max-n", 10**4)
        assert [r["n"] for r in json.loads(out)["rows"]] == [1, 10, 100, 1000, 10000]

    def test_default_schedule_is_geometric_two(self, capsys, write_file):
        code, out, _ = run(capsys, "trace", write_file("a", "01\n" * 10))
        assert [r["n"] for r in json.loads(out)["rows"]] == [1, 2, 4, 8, 16]

    def test_verdict(self, capsys):
        code, out, _ = run(
            capsys, "trace", "--gen", "periodic:0", "--checkpoints", "1,10,100", "--epsilon", "1/10"
        )
        v = json.loads(out)["summary"]["verdict"]
        assert v["status"] == "not-converged" and v["epsilon"] == "1/10" and v["window"] == 3

    def test_needs_one_source(self, capsys, write_file):
        assert run(capsys, "trace", "--checkpoints", 1)[0] == 2
        assert run(capsys, "trace", write_file("a", "0"), "--gen", "champernowne", "--checkpoints", 1)[0] == 2

    @pytest.mark.parametrize(
        "gen", ["nope", "periodic:", "periodic:0?", "bernoulli:1/2,1/3", "champernowne:3", "periodic:012"]
    )
    def test_bad_generators(self, capsys, gen):
        assert run(capsys, "trace", "--gen", gen, "--checkpoints", 1)[0] == 2

    def test_base_mismatch_for_bernoulli(self, capsys):
        assert run(capsys, "trace", "--gen", "bernoulli:1/2,1/2", "--base", 3, "--checkpoints", 1)[0] == 2

    def test_bad_checkpoints_exit_2(self, capsys):
        assert run(capsys, "trace", "--gen", "champernowne", "--checkpoints", "5,3")[0] == 2
        with pytest.raises(SystemExit) as exc:
            main(["trace", "--gen", "champernowne", "--checkpoints", "a,b"])
        assert exc.value.code == 2

    def test_target_list(self, capsys):
        code, out, _ = run(
            capsys, "trace", "--gen", "periodic:0", "--checkpoints", 4, "--target", "1,0"
        )
        assert json.loads(out)["rows"][0]["tv_to_target"] == "0"

    def test_output_file(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        code, stdout, _ = run(capsys, "trace", "--gen", "periodic:01", "--checkpoints", 2, "--format", "csv", "--out", out)
        assert code == 0 and stdout == ""
        assert out.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 10), st.data())
    def test_rows_round_trip(self, m, data):
        import contextlib

        pattern = "".join(data.draw(st.lists(st.sampled_from("0123456789"[:m]), min_size=1, max_size=7)))
        pts = sorted(data.draw(st.sets(st.integers(1, 500), min_size=1, max_size=8)))
        for fmt in ("json", "csv"):
            buf = io.StringIO()
            with contextlib.redirect_stdout(buf):
                code = main(["trace", "--gen", f"periodic:{pattern}", "--base", str(m),
                             "--checkpoints", ",".join(map(str, pts)), "--format", fmt])
            assert code == 0
            if fmt == "json":
                rows = json.loads(buf.getvalue())["rows"]
                nums = [r["numerators"] for r in rows]
                dens = [r["denominator"] for r in rows]
            else:
                rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
                assert list(rows[0].keys()) == list(TRACE_COLUMNS)
                nums = [[int(x) for x in r["numerators"].split()] for r in rows]
                dens = [int(r["denominator"]) for r in rows]
            assert [int(r["n"]) for r in rows] == pts
            for nm, d in zip(nums, dens):
                assert sum(nm) == d and len(nm) == m
            for r in rows:
                Fraction(r["tv_to_target"]), Fraction(r["sup_dev_to_target"])


class TestGen:
    def test_periodic_ascii(self, capsys, tmp_path):
        out = tmp_path / "p.txt"
        assert run(capsys, "gen", "--gen", "periodic:01", "--count", 4, "--encode", "ascii", "--out", out)[0] == 0
        assert out.read_bytes() == b"0101"

    def test_champernowne_base10(self, capsys, tmp_path):
        out = tmp_path / "c.txt"
        run(capsys, "gen", "--gen", "champernowne", "--base", 10, "--count", 10, "--out", out)
        expected = "".join(str(d) for d in champernowne_prefix(10, 10))
        assert out.read_text() == expected == "1234567891"

    @pytest.mark.parametrize("gen", ["periodic:01", "champernowne", "bernoulli:1/2,1/2"])
    def test_zero_count(self, capsys, tmp_path, gen):
        out = tmp_path / "e"
        assert run(capsys, "gen", "--gen", gen, "--count", 0, "--out", out)[0] == 0
        assert out.read_bytes() == b""

    def test_raw(self, capsys, tmp_path):
        out = tmp_path / "r.bin"
        run(capsys, "gen", "--gen", "periodic:0a", "--base", 16, "--count", 5, "--encode", "raw", "--out", out)
        assert out.read_bytes() == bytes([0, 10, 0, 10, 0])

    def test_unwritable(self, capsys, tmp_path):
        code, _, err = run(capsys, "gen", "--gen", "champernowne", "--count", 3, "--out", tmp_path / "no" / "x")
        assert code == 2 and err

    @pytest.mark.parametrize(
        "gen,base,stream",
        [
            ("champernowne", 7, lambda: gen_champernowne(Alphabet(7))),
            ("periodic:0112", 3, lambda: gen_periodic([0, 1, 1, 2], Alphabet(3))),
            ("bernoulli:1/5,3/10,1/2", 3, lambda: gen_bernoulli(["1/5", "3/10", "1/2"], 42)),
        ],
    )
    @pytest.mark.parametrize("encode", ["ascii", "raw"])
    def test_gen_count_round_trip(self, capsys, tmp_path, gen, base, stream, encode):
        n = 12345
        out = tmp_path / "g"
        run(capsys, "gen", "--gen", gen, "--base", base, "--seed", 42, "--count", n, "--encode", encode,
            "--out", out, "--chunk-size", 1000)
        code, text, _ = run(capsys, "count", out, "--base", base, "--decode", encode)
        assert code == 0
        expected = count_prefix(stream().take(n), n, Alphabet(base))
        assert json.loads(text)["counts"] == list(expected.counts)


class TestCompare:
    @pytest.mark.parametrize(
        "a,b,tv",
        [("0101", "1010", "0"), ("0000", "1111", "1"), ("0110", "0100", "1/4")],
    )
    def test_examples(self, capsys, write_file, a, b, tv):
        code, out, _ = run(capsys, "compare", write_file("a", a), write_file("b", b), "--base", 2, "--n", 4)
        assert code == 0
        assert json.loads(out)["total_variation"] == tv

    def test_measures_reported(self, capsys, write_file):
        _, out, _ = run(capsys, "compare", write_file("a", "0101"), write_file("b", "1010"), "--n", 4)
        doc = json.loads(out)
        assert doc["left"]["measure"] == doc["right"]["measure"] == ["1/2", "1/2"]
        assert doc["sup_deviation"] == "0"

    def test_insufficient(self, capsys, write_file):
        code, _, err = run(capsys, "compare", write_file("a", "01"), write_file("b", "0101"), "--n", 4)
        assert code == 2

    def test_default_n_is_shorter(self, capsys, write_file):
        _, out, _ = run(capsys, "compare", write_file("a", "011"), write_file("b", "00000"))
        assert json.loads(out)["n"] == 3


class TestFormatting:
    @pytest.mark.parametrize("value,text", [(Fraction(2, 4), "1/2"), (0, "0"), (1, "1"), (Fraction(6, 3), "2")])
    def test_rational(self, value, text):
        assert format_rational(value) == text

    @pytest.mark.parametrize(
        "x,text",
        [
            (1.0, "1"),
            (0.0, "0"),
            (0.9182958340544896, "0.918295834054"),
            (0.5, "0.5"),
            (1 / 3, "0.333333333333"),
            (0.1234567890125, "0.123456789012"),  # binary value is just below ...0125
            (1.5e-13, "0.00000000000015"),
        ],
    )
    def test_decimal(self, x, text):
        assert format_decimal(x) == text

    @pytest.mark.parametrize("x,text", [(0.125, "0.12"), (0.375, "0.38"), (0.625, "0.62")])
    def test_decimal_ties_to_even(self, x, text):
        # exact binary ties at two digits
        assert format_decimal(x, digits=2) == text


def test_module_entry_point(tmp_path):
    path = tmp_path / "a"
    path.write_text("0120")
    r = subprocess.run([sys.executable, "-m", "symfreq", "count", str(path), "--base", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "offset 2" in r.stderr
    r = subprocess.run([sys.executable, "-m", "symfreq", "count"], capture_output=True, text=True)
    assert r.returncode == 2
    r = subprocess.run([sys.executable, "-m", "symfreq", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "bernoulli:" in r.stdout
