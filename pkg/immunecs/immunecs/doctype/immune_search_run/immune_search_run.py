# -*- coding: utf-8 -*-
from __future__ import unicode_literals
import json
import frappe
from frappe.model.document import Document
from frappe.utils import cint

from immunecs.immunecs.engine.config import EVALUATORS, RunConfig
from immunecs.immunecs.engine.exceptions import ImmuneError
from immunecs.immunecs.engine.space import load_space

SEARCH_FIELDS = (
    "seed", "population_size", "initial_depth", "n_clones", "n_insertions", "n_augment",
    "rho", "patience", "tau", "max_generations", "max_evaluations",
)

# Int and Float columns store blanks as 0; only these settings accept 0 as a value
ZERO_VALID_FIELDS = ("seed", "n_insertions")


class ImmuneSearchRun(Document):
    def validate(self):
        self.validate_search_space()
        self.validate_search_settings()
        self.set_defaults()

    def validate_search_space(self):
        """Search space must be a preset name or a readable space file"""
        if self.evaluator not in EVALUATORS:
            frappe.throw(f"Unknown evaluator {self.evaluator}")

        try:
            space = load_space(self.search_space)
        except ImmuneError as e:
            frappe.throw(str(e))

        if self.evaluator == "neural" and not space.decodable:
            frappe.throw(f"Search space {space.name} cannot be trained by the neural evaluator")

    def validate_search_settings(self):
        """Build the engine configuration so its own checks apply"""
        try:
            self.get_run_config()
        except ImmuneError as e:
            frappe.throw(str(e))
        except ValueError as e:
            frappe.throw(f"Configuration JSON is not valid: {str(e)}")

    def set_defaults(self):
        if not self.status:
            self.status = "Queued"

        if not self.max_attempts:
            self.max_attempts = 3

    def get_search_settings(self):
        """Search fields that are set; unset fields fall back to the preset or defaults"""
        settings = {}
        for fieldname in SEARCH_FIELDS:
            value = self.get(fieldname)
            if value is None or value == "":
                continue
            if value == 0 and fieldname not in ZERO_VALID_FIELDS:
                continue
            settings[fieldname] = value
        settings["seed"] = cint(self.seed)
        if self.preset:
            settings["preset"] = self.preset
        return settings

    def get_run_config(self):
        data = json.loads(self.config_json) if self.config_json else {}
        search = dict(data.get("search", {}))
        search.update(self.get_search_settings())
        data["search"] = search
        return RunConfig.from_dict(data)


def delete_run_records(doc, method=None):
    """Remove the candidates and generation logs of a deleted run"""
    for doctype in ("Immune Candidate", "Immune Generation Log"):
        for name in frappe.get_all(doctype, filters={"search_run": doc.name}, pluck="name"):
            frappe.delete_doc(doctype, name, ignore_permissions=True)
