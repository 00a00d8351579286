""" Mesh-less generalized Graetz solver for layered conjugate heat exchangers
"""
__app_name__ = "graetzmodes"
__version__ = "0.1.0"
__author__ = "The graetzmodes developers"
