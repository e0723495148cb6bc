# -*- coding: utf-8 -*-
"""Exceptions raised by the search engine."""


class ImmuneError(Exception):
    """Base class for every engine error."""


class ConfigurationError(ImmuneError):
    """A configuration object or search space is invalid."""


class ArgumentError(ImmuneError, ValueError):
    """An operation was called with arguments outside its domain."""


class EvaluationError(ImmuneError):
    """A candidate could not be evaluated."""
