"""
Test for _version.py not present
"""

import importlib
import sys
from unittest import mock


def test_version_fallback():
    """
    Remove _version to test for missing _version.py
    """

    # Remove the _version module from sys.modules if present
    sys.modules.pop("gpwtdg._version", None)

    # Patch sys.modules so importing gpwtdg._version raises ImportError
    with mock.patch.dict("sys.modules", {"gpwtdg._version": None}):
        # Remove the main package module so reload triggers fresh import logic
        sys.modules.pop("gpwtdg", None)

        import gpwtdg  # pylint: disable=import-outside-toplevel

        importlib.reload(gpwtdg)

        assert gpwtdg.__version__ == "0.0.0+local"
