import io
import json

import numpy as np
import pytest

from trajmatch.io import InputError, dumps, read_manifest, read_scene_csv, write_manifest, write_scene_csv
from trajmatch.synth import PRESET_PLAYS, generate_play

HEADER = "entity_id,point_id,frame,x,y\n"


def write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_round_trip(tmp_path):
    scene = generate_play(PRESET_PLAYS["drop_back"]())
    write_scene_csv(scene, tmp_path / "a.csv")
    back = read_scene_csv(tmp_path / "a.csv")
    assert back.trajectory_ids() == sorted(scene.trajectory_ids())
    sm = scene.trajectory_map()
    for key, t in back.trajectory_map().items():
        np.testing.assert_array_equal(t.xy, sm[key].xy)
        np.testing.assert_array_equal(t.frames, sm[key].frames)


def test_unsorted_rows(tmp_path):
    p = write(tmp_path, HEADER + "b,1,2,0.2,0\na,1,1,1,1\nb,1,0,0,0\na,1,0,0,0\nb,1,1,0.1,0\n")
    s = read_scene_csv(p)
    assert [t.entity_id for t in s.tracks] == ["a", "b"]
    assert s.trajectory_map()[("b", "1")].frames.tolist() == [0, 1, 2]


@pytest.mark.parametrize(
    "body,line",
    [
        ("a,1,0,0,0\na,1,1,x,0\n", 3),
        ("a,1,0,0,0\na,1,1,0\n", 3),
        ("a,1,0,0,0\na,1,1,0,0\na,1,1,2,2\n", 4),
        ("a,1,0,0,0\na,1,1,nan,0\n", 3),
        ("a,1,0,0,0\na,1,1,0,0\nb,1,5,0,0\n", 4),
    ],
)
def test_malformed_rows_report_line(tmp_path, body, line):
    with pytest.raises(InputError) as exc:
        read_scene_csv(write(tmp_path, HEADER + body))
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_bad_header(tmp_path):
    with pytest.raises(InputError, match="line 1"):
        read_scene_csv(write(tmp_path, "a,b,c\n1,2,3\n"))
    with pytest.raises(InputError):
        read_scene_csv(write(tmp_path, HEADER))


def test_manifest(tmp_path):
    (tmp_path / "sub").mkdir()
    m = write(tmp_path, "# comment\nA\tone.csv\n\n\tsub/two.csv\n", "m.tsv")
    entries = read_manifest(m)
    assert entries == [("A", tmp_path / "one.csv"), (None, tmp_path / "sub" / "two.csv")]
    write_manifest(entries, tmp_path / "copy.tsv")
    assert read_manifest(tmp_path / "copy.tsv") == entries


def test_manifest_errors(tmp_path):
    with pytest.raises(InputError, match="line 2"):
        read_manifest(write(tmp_path, "A\tx.csv\nno tab here\n", "m.tsv"))
    with pytest.raises(InputError):
        read_manifest(write(tmp_path, "\n# nothing\n", "e.tsv"))


def test_manifest_stream(tmp_path):
    entries = read_manifest("-", io.StringIO(f"A\t{tmp_path / 'x.csv'}\n"))
    assert entries == [("A", tmp_path / "x.csv")]


def test_dumps_deterministic():
    text = dumps({"b": np.float64(np.nan), "a": np.arange(3), "c": -0.0})
    assert text == dumps({"c": 0.0, "a": [0, 1, 2], "b": None})
    assert json.loads(text) == {"a": [0, 1, 2], "b": None, "c": 0.0}
