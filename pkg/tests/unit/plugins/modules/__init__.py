# -*- coding: utf-8 -*-
"""Module plugin tests package for gaitlab.msgcn collection."""
