import pytest

from fixtures_scene import make_fixture_scene

from pseudoview.scene import load_scene


@pytest.fixture(scope="session")
def fixture_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("scene")
    return make_fixture_scene(root)


@pytest.fixture(scope="session")
def fixture_scene(fixture_manifest):
    return load_scene(fixture_manifest)


@pytest.fixture(scope="session")
def overlap_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("scene_overlap")
    return make_fixture_scene(root, with_overlap_camera=True, with_static_box=True)


@pytest.fixture(scope="session")
def overlap_scene(overlap_manifest):
    return load_scene(overlap_manifest)
