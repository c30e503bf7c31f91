#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   sselab_utilities.py: functions common to multiple sselab scripts.
#-------------------------------------------------------------------------------

#-------------------------------------------------------------------------------
#   This file is part of sselab.
#
#   sselab is free software: you can redistribute it and/or modify
#   it under the terms of the GNU General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#   (at your option) any later version.
#
#   sselab is distributed in the hope that it will be useful,
#   but WITHOUT ANY WARRANTY; without even the implied warranty of
#   MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#   GNU General Public License for more details.
#
#   You should have received a copy of the GNU General Public License
#   along with sselab.  If not, see <https://www.gnu.org/licenses/>.
#-------------------------------------------------------------------------------

import os
import sys
import json
import hashlib
import logging as log

import numpy as np

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

rootDir = os.path.dirname(os.path.realpath(__file__)) + '/../'

#-------------------------------------------------------------------------------
#   Errors
#-------------------------------------------------------------------------------

class SselabError(Exception):
    '''Base class for all sselab failures.'''

class ConfigError(SselabError):
    pass

class GeometryError(SselabError):
    pass

class WeightError(SselabError):
    pass

class BlowUpError(SselabError):
    '''Non-finite state during time stepping.'''
    def __init__(self, message, step = None):
        super().__init__(message)
        self.step = step

class ReportError(SselabError):
    pass

#-------------------------------------------------------------------------------
#   Helpers
#-------------------------------------------------------------------------------

class NumpyEncoder(json.JSONEncoder):
    '''Serializes numpy scalars and arrays in JSON manifests.'''
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return json.JSONEncoder.default(self, obj)

def check_path(path):
    '''Check if path exists and if it is terminated by "/".'''
    if not os.path.isdir(path):
        os.makedirs(path, exist_ok = True)

    if path[-1] != '/': path += '/'

    return path

def load_parameters():
    '''Returns known profiles, subcommands, caps and config defaults.'''
    with open(rootDir + 'dat/info/parameters.json', 'r') as file:
        return json.load(file)

def fingerprint(config):
    '''Stable hash of a canonicalized config dictionary and tool version.'''
    canonical = json.dumps(config, sort_keys = True, separators = (',', ':'),
                           cls = NumpyEncoder)
    digest = hashlib.sha256((canonical + __version__).encode('utf-8'))
    return digest.hexdigest()[:16]

def setup_log(log_file, verbose = False):
    '''Routes messages to a log file and, if verbose, to the console.'''
    handlers = [log.FileHandler(log_file, mode = 'w')]
    if verbose:
        handlers.append(log.StreamHandler(sys.stdout))

    for handler in log.root.handlers[:]:
        log.root.removeHandler(handler)

    log.basicConfig(level = log.DEBUG,
                    format = '%(message)s',
                    handlers = handlers)

def hline():
    log.info('-'*80)

#-------------------------------------------------------------------------------
