"""Scaled-down acceptance harness"""
