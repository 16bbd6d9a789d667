import pytest

from cli.core.config_file import load_default_map, option_key, parse_config, to_default_map


def test_option_key():
    """Test that option names map to config keys."""
    assert option_key("--N") == "N"
    assert option_key("--layer-fraction") == "layer_fraction"
    assert option_key(" majorant-grid ") == "majorant_grid"


def test_parse_config_values_and_comments():
    """Test scalars, comma lists, comments and blank lines."""
    text = "# sweep\n\np = 4\nN = e^10, e^20 ,e^40\n\nseed=7  # fixed\n"
    assert parse_config(text) == {
        "p": "4",
        "N": ["e^10", "e^20", "e^40"],
        "seed": "7",
    }


def test_parse_config_later_lines_win():
    """Test that a repeated key keeps its last value."""
    assert parse_config("p=2\np=3\n") == {"p": "3"}


@pytest.mark.parametrize("text", ["p 4\n", "=4\n", "  = 1  \n"])
def test_parse_config_rejects_malformed_lines(text):
    """Test that lines without a key or '=' are refused with their number."""
    with pytest.raises(ValueError, match="line 1"):
        parse_config(text)


def test_to_default_map_scopes_keys():
    """Test that bare keys reach every command and scoped keys win."""
    entries = {"p": "3", "staircase.p": "4", "martingale.paths": "2000"}
    default_map = to_default_map(entries, ["staircase", "martingale"])
    assert default_map == {
        "staircase": {"p": "4"},
        "martingale": {"p": "3", "paths": "2000"},
    }


def test_to_default_map_scoped_key_wins_regardless_of_order():
    """Test that a scoped key written before its bare key still wins."""
    entries = {"staircase.p": "4", "p": "3"}
    assert to_default_map(entries, ["staircase"]) == {"staircase": {"p": "4"}}


def test_to_default_map_normalizes_scoped_options():
    """Test that dashed option names are accepted after a command prefix."""
    default_map = to_default_map({"realize.layer-fraction": "0.1"}, ["realize"])
    assert default_map == {"realize": {"layer_fraction": "0.1"}}


def test_dotted_key_of_unknown_command_stays_bare():
    """Test that a prefix naming no command is kept as a plain key."""
    default_map = to_default_map({"foo.p": "3"}, ["constants"])
    assert default_map == {"constants": {"foo.p": "3"}}


def test_load_default_map(tmp_path):
    """Test reading a config file from disk."""
    path = tmp_path / "run.conf"
    path.write_text("tau = 0.5\nburkholder-scan.grid = 64\n")
    default_map = load_default_map(path, ["constants", "burkholder-scan"])
    assert default_map["constants"] == {"tau": "0.5"}
    assert default_map["burkholder-scan"] == {"tau": "0.5", "grid": "64"}
