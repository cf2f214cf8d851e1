"""Run output storage"""
