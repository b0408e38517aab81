# Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
"""Segment retrieval, guidance composition and ground-truth distortion toolkit."""

from ._retguide import *  # noqa: F401,F403
from ._retguide import __version__  # noqa: F401
