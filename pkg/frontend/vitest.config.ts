import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // The e2e suite boots the real tutoring server in a child process.
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
