# -*- coding: utf-8 -*-
from __future__ import unicode_literals
import json
import frappe
from frappe.model.document import Document

from immunecs.immunecs.engine.exceptions import ImmuneError
from immunecs.immunecs.engine.genome import ArchitectureGenome, encode_string
from immunecs.immunecs.engine.space import load_space


class ImmuneCandidate(Document):
    def validate(self):
        self.validate_search_run()
        self.validate_affinity()

    def validate_search_run(self):
        if not frappe.db.exists("Immune Search Run", self.search_run):
            frappe.throw(f"Immune Search Run {self.search_run} does not exist")

    def validate_affinity(self):
        if self.affinity is None or not 0 <= self.affinity <= 1:
            frappe.throw(f"Affinity must lie in [0, 1], got {self.affinity}")

    def get_genome(self):
        """Rebuild the continuous genome in the run's search space"""
        space_ref = frappe.db.get_value("Immune Search Run", self.search_run, "search_space")
        try:
            genome = ArchitectureGenome.from_dict(json.loads(self.genome_json), load_space(space_ref))
        except (ImmuneError, ValueError, TypeError) as e:
            frappe.throw(f"Genome of {self.name} cannot be rebuilt: {str(e)}")

        if encode_string(genome) != self.encoding:
            frappe.throw(f"Genome of {self.name} does not match its encoding")
        return genome
