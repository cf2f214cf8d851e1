"""Prompt context and variable descriptions for remote priors"""
