#!/usr/bin/env python
# coding: utf-8
"""Collaborative cluster configuration tools."""

__url__ = "https://github.com/metaist/collabconf"
__version__ = "0.1.0"
__pubdate__ = ""  # date/time in UTC
__author__ = "Metaist LLC"
__email__ = "hello@metaist.com"
__copyright__ = "Copyright 2026 by Metaist LLC"
__license__ = "MIT"
