import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // The end-to-end test builds a demo bundle on first run and boots the
    // Python service; generous limits keep that from flaking on slow disks.
    testTimeout: 180_000,
    hookTimeout: 300_000,
  },
});
