# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0
