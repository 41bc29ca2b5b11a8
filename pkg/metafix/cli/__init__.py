# -*- coding: utf-8; -*-
"""Command-line harness for `metafix`. The entry point is `metafix.cli.main.main`."""
