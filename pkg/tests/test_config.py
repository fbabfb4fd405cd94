import pytest

from esdg.config import ConfigError, RunConfig

SAMPLE = """
[physics]
law = euler
gamma = 1.4

[mesh]
mesh_kind = threeblock
level = 2
orders = 3,4,3
size = 1.0
bc = periodic

[run]
coupling = es
cfl = 0.25
t_end = 2.5
seed = 11
observe_every = 10
out_dir = results
threads = 2
"""


def test_parse_fields():
    config = RunConfig.from_string(SAMPLE)
    assert config.law == "euler"
    assert config.orders == (3, 4, 3)
    assert config.coupling == "es"
    assert config.cfl == 0.25
    assert config.seed == 11


def test_roundtrip_identity():
    config = RunConfig.from_string(SAMPLE)
    again = RunConfig.from_string(config.to_string())
    assert again == config
    assert again.to_string() == config.to_string()
    assert again.digest() == config.digest()


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_string("[run]\nwarp_speed = 9\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_string("[turbo]\nx = 1\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_string("[run]\ncfl = fast\n")


@pytest.mark.parametrize("field,value", [
    ("law", "mhd"),
    ("coupling", "upwind"),
    ("bc", "reflecting"),
    ("cfl", -1.0),
    ("t_end", -2.0),
    ("level", 0),
    ("threads", 0),
    ("ic", "blast"),
])
def test_validation(field, value):
    with pytest.raises(ConfigError):
        RunConfig(**{field: value})


def test_mesh_factory_threeblock():
    config = RunConfig(mesh_kind="threeblock", level=2, orders=(2, 3, 2),
                       size=1.0)
    mesh = config.make_mesh()
    assert mesh.n_elements == 12


def test_mesh_factory_uniform():
    config = RunConfig(mesh_kind="uniform", nx=3, ny=2, order=4,
                       bounds=(0.0, 1.0, 0.0, 1.0))
    assert config.make_mesh().n_elements == 6


def test_mesh_factory_file(tmp_path):
    from esdg.mesh import build_uniform_mesh, write_mesh_file
    path = tmp_path / "m.txt"
    write_mesh_file(build_uniform_mesh(2, 2, 3), path)
    config = RunConfig(mesh_kind="file", mesh_path=str(path))
    assert config.make_mesh().n_elements == 4


def test_file_roundtrip(tmp_path):
    config = RunConfig.from_string(SAMPLE)
    path = tmp_path / "run.ini"
    config.to_file(path)
    assert RunConfig.from_file(path) == config
