#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
midillm - command-line entry point
"""

from midillm.cli import main

if __name__ == '__main__':
    main()
