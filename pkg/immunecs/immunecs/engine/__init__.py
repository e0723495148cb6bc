# -*- coding: utf-8 -*-
"""
Framework-free core of the ImmuNeCS search: genomes, mutation, the clonal
selection loop, evaluators, committees, baselines and the validation harness.
"""
