import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.voxelize import PointCloud, load_cloud, save_cloud


@pytest.fixture
def cloud():
    rng = np.random.default_rng(0)
    return PointCloud.from_xyzi(np.column_stack([rng.normal(size=(20, 3)) * 5, rng.uniform(0, 1, 20)]))


@pytest.mark.parametrize("name", ["cloud.csv", "cloud.bin"])
def test_save_load(tmp_path, cloud, name):
    path = save_cloud(tmp_path / name, cloud)
    loaded = load_cloud(path)
    np.testing.assert_array_equal(loaded.points, cloud.points)


def test_csv_header(tmp_path, cloud):
    path = save_cloud(tmp_path / "c.csv", cloud)
    assert path.read_text().splitlines()[0] == "x,y,z,i"


def test_empty_csv(tmp_path):
    path = save_cloud(tmp_path / "e.csv", PointCloud.empty())
    assert len(load_cloud(path)) == 0
    with pytest.raises(DataError):
        save_cloud(tmp_path / "e.bin", PointCloud.empty())


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_cloud(tmp_path / "nope.csv")


@pytest.mark.parametrize("text", ["a,b,c\n1,2,3\n", "x,y,z,i\n1,2,three,4\n", "x,y,z,i\n1,2,3\n"])
def test_malformed_csv(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError):
        load_cloud(path)
