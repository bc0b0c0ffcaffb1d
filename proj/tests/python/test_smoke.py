def test_import():
    import rvhyp  # noqa: F401
