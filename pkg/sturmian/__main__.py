# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

from sturmian.main import main

if __name__ == '__main__':
    main()
