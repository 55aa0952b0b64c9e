# -*- coding: utf-8 -*-
"""Unit tests package for gaitlab.msgcn collection."""
