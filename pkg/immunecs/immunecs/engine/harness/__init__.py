# -*- coding: utf-8 -*-
"""
Assumption checks, statistics, run comparison and result directories.
"""
