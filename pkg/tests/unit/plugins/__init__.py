# -*- coding: utf-8 -*-
"""Plugin tests package for gaitlab.msgcn collection."""
