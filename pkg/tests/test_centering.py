"""
Test suite for centering tables and their store.
"""

import json
import tempfile
from pathlib import Path

from rangewalk.centering import CenteringStore, CenteringTable, table_filename
from rangewalk.errors import CenteringError
from rangewalk.regvar import make_scale_suite
from rangewalk.walks import WalkSpec


def make_table(depth: int = 3, n: int = 1024, t: float = 1.0, count: str = "sites") -> CenteringTable:
    means = [[float(j + i) for i in range(2 ** j)] for j in range(depth)]
    return CenteringTable("abc123", n, depth, t, count, means, [1.0] * depth, 500)


def test_table_basics():
    """Level means, truncation and serialisation"""
    print("Testing centering table...")

    table = make_table()
    assert list(table.level_means(2)) == [1.0, 2.0]
    shallow = table.truncated(2)
    assert shallow.depth == 2 and len(shallow.means) == 2
    assert CenteringTable.from_dict(table.to_dict()) == table

    for level in (0, 4):
        try:
            table.level_means(level)
            assert False, f"Should have raised CenteringError for level {level}"
        except CenteringError:
            pass
    try:
        table.truncated(5)
        assert False, "Should have raised CenteringError"
    except CenteringError:
        pass

    data = table.to_dict()
    data['version'] = 99
    try:
        CenteringTable.from_dict(data)
        assert False, "Should have raised CenteringError for an unknown version"
    except CenteringError:
        pass

    assert table_filename(65536, 8, 1.0, "sites") == "n_65536_depth_8_t_1_sites.json"

    print("✓ Centering table")


def test_store_roundtrip():
    """Tables saved to disk load back, deeper ones are truncated"""
    print("Testing centering store...")

    with tempfile.TemporaryDirectory() as temp_dir:
        store = CenteringStore(temp_dir)
        path = store.save(make_table(depth=4))
        assert path.exists()
        assert json.loads(path.read_text())['depth'] == 4

        fresh = CenteringStore(temp_dir)
        exact = fresh.load("abc123", 1024, 4, 1.0)
        assert exact == make_table(depth=4)
        deeper = CenteringStore(temp_dir).load("abc123", 1024, 2, 1.0)
        assert deeper.depth == 2
        assert deeper.means == make_table(depth=4).means[:2]

        for args in (("abc123", 2048, 2, 1.0), ("abc123", 1024, 5, 1.0),
                     ("abc123", 1024, 2, 0.5), ("other", 1024, 2, 1.0)):
            try:
                fresh.load(*args)
                assert False, f"Should have raised CenteringError for {args}"
            except CenteringError:
                pass
        try:
            fresh.load("abc123", 1024, 2, 1.0, count="pairs")
            assert False, "Should have raised CenteringError for another count"
        except CenteringError:
            pass

        # Corrupt files are skipped
        bad = Path(temp_dir) / "abc123" / table_filename(512, 2, 1.0, "sites")
        bad.write_text("{not json")
        try:
            fresh.load("abc123", 512, 2, 1.0)
            assert False, "Should have raised CenteringError for a corrupt table"
        except CenteringError:
            pass

    print("✓ Centering store")


def test_memory_store():
    """A store without a directory only caches"""
    print("Testing in-memory store...")

    store = CenteringStore()
    assert store.save(make_table(depth=3)) is None
    assert store.load("abc123", 1024, 3, 1.0).depth == 3
    assert store.load("abc123", 1024, 1, 1.0).depth == 1
    assert store.save_suite(make_scale_suite(1, 2.0, WalkSpec.srw(1), 16)) is None
    try:
        store.load_suite("abc123")
        assert False, "Should have raised CenteringError"
    except CenteringError:
        pass

    print("✓ In-memory store")


def test_pinned_suite():
    """Scale suites are pinned next to the tables"""
    print("Testing pinned scale suite...")

    spec = WalkSpec.lazy_srw(2)
    suite = make_scale_suite(2, 2.0, spec, 64)
    suite.tabulate([16, 64])
    with tempfile.TemporaryDirectory() as temp_dir:
        store = CenteringStore(temp_dir)
        path = store.save_suite(suite)
        assert path.parent.name == spec.spec_hash()
        restored = store.load_suite(spec.spec_hash())
        assert restored.h(64) == suite.h(64)
        assert restored.regime == suite.regime

    print("✓ Pinned scale suite")
