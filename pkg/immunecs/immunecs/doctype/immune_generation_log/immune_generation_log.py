# -*- coding: utf-8 -*-
from __future__ import unicode_literals
import frappe
from frappe.model.document import Document
from frappe.utils import now

class ImmuneGenerationLog(Document):
    def validate(self):
        if not self.event_time:
            self.event_time = now()

        if self.event_type == "generation" and (self.mean_affinity or 0) > (self.best_affinity or 0):
            frappe.throw("Mean affinity cannot exceed the best affinity of a generation")
