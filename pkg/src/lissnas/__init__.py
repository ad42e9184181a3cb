# -*- coding: utf-8 -*-
"""
Locality-based iterative search space shrinkage for neural architecture
search, with the measurements used to judge the shrunk spaces.
"""
