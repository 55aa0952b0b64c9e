# -*- coding: utf-8 -*-
"""Tests package for gaitlab.msgcn collection."""
